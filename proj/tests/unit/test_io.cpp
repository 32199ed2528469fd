#include "csmspec/io.hpp"

#include "../support/helpers.hpp"

#include <doctest.h>

#include <filesystem>
#include <random>

using namespace csmspec;

TEST_CASE("format_double round-trips") {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-1e6, 1e6);
  for (int i = 0; i < 1000; ++i) {
    const double v = u(rng) * std::pow(10.0, static_cast<int>(rng() % 40) - 20);
    CHECK(std::stod(io::format_double(v)) == v);
  }
  CHECK(io::format_double(0.5) == "0.5");
}

TEST_CASE("point cloud CSV round trip with and without labels") {
  PointCloud c;
  c.points.resize(3, 2);
  c.points << 0.1, -2.5, 1e-300, 3.0, 1.0 / 3.0, 7.0;
  const auto back = io::parse_point_cloud_csv(io::point_cloud_csv(c));
  CHECK(back.points == c.points);
  CHECK_FALSE(back.labels.has_value());
  CHECK(back.provenance == Provenance::Ingested);

  c.labels = std::vector<int>{1, 2, 1};
  const auto labeled = io::parse_point_cloud_csv(io::point_cloud_csv(c));
  CHECK(*labeled.labels == *c.labels);

  const auto bom = io::parse_point_cloud_csv("\xEF\xBB\xBFx0, x1\n1, 2\n\n3,4\n");
  CHECK(bom.points.rows() == 2);
  CHECK(bom.points(1, 1) == 4.0);
}

TEST_CASE("point cloud CSV errors") {
  CHECK_CSM_ERROR(io::parse_point_cloud_csv(""), ErrorCode::ParseError);
  CHECK_CSM_ERROR(io::parse_point_cloud_csv("x0,y\n1,2\n"), ErrorCode::ParseError);
  CHECK_CSM_ERROR(io::parse_point_cloud_csv("x0,x1\n1\n"), ErrorCode::ParseError);
  CHECK_CSM_ERROR(io::parse_point_cloud_csv("x0\nabc\n"), ErrorCode::ParseError);
  CHECK_CSM_ERROR(io::parse_point_cloud_csv("x0,label\n1,1.5\n"), ErrorCode::ParseError);
  CHECK_CSM_ERROR(io::parse_point_cloud_csv("x0\n"), ErrorCode::ParseError);
  CHECK_CSM_ERROR(io::parse_point_cloud_csv("label\n1\n"), ErrorCode::ParseError);
}

TEST_CASE("CSM spec JSON round trip and nested matrices") {
  Eigen::MatrixXd A(2, 2), B(2, 3), L(3, 2);
  A << 0.2, 0.1, -0.1, 0.3;
  B << 1, 0, -1, 0, 1, 0.5;
  L << 1, 0, 0, 1, -1, -1;
  const CSMSpec spec(A, B, L, DecoderMode::GaussianLogit, 0.25, Eigen::Vector2d(0.1, -0.2),
                     StateBox::cube(2, -1.5, 1.5));
  const auto back = io::parse_csm_spec_json(io::csm_spec_json(spec));
  CHECK(back.A() == A);
  CHECK(back.B() == B);
  CHECK(back.logits() == L);
  CHECK(back.decoder() == DecoderMode::GaussianLogit);
  CHECK(back.sigma_dec() == 0.25);
  CHECK(back.s0() == spec.s0());
  CHECK(back.box().upper() == spec.box().upper());

  const auto nested = io::parse_csm_spec_json(
      R"({"d":1,"vocab":2,"A":[[0.5]],"B":[[1,-1]],"logits":[[2],[-2]]})");
  CHECK(nested.decoder() == DecoderMode::Softmax);
  CHECK(nested.s0()[0] == 0.0);
  CHECK(nested.logits()(1, 0) == -2.0);
}

TEST_CASE("CSM spec JSON errors") {
  CHECK_CSM_ERROR(io::parse_csm_spec_json("{"), ErrorCode::ParseError);
  CHECK_CSM_ERROR(io::parse_csm_spec_json("[]"), ErrorCode::ParseError);
  CHECK_CSM_ERROR(io::parse_csm_spec_json(R"({"d":1,"vocab":1,"B":[1],"logits":[1]})"), ErrorCode::ParseError);
  CHECK_CSM_ERROR(io::parse_csm_spec_json(R"({"d":1,"vocab":1,"A":[1,2],"B":[1],"logits":[1]})"), ErrorCode::ShapeError);
  CHECK_CSM_ERROR(io::parse_csm_spec_json(R"({"d":1,"vocab":1,"A":[1],"B":[1],"logits":[1],"decoder":"x"})"),
                  ErrorCode::ParseError);
  CHECK_CSM_ERROR(io::parse_csm_spec_json(R"({"d":"one","vocab":1,"A":[1],"B":[1],"logits":[1]})"),
                  ErrorCode::ParseError);
  CHECK_CSM_ERROR(io::parse_csm_spec_json(R"({"d":1,"vocab":1,"A":[1],"B":[1],"logits":[1],"s0":[3]})"),
                  ErrorCode::OutOfDomain);
}

TEST_CASE("artifact writers") {
  Trajectory tr;
  tr.states = {Eigen::Vector2d(0.0, 0.5), Eigen::Vector2d(0.25, -1.0)};
  tr.controls = {Eigen::Vector2d(0.5, 0.5), Eigen::Vector2d(1.0, 0.0)};
  CHECK(io::trajectory_csv(tr) == "t,s0,s1,u0,u1\n0,0,0.5,0.5,0.5\n1,0.25,-1,1,0\n");

  SpectralDecomposition dec;
  dec.values = Eigen::Vector2cd(1.0, std::complex<double>(0.0, 0.5));
  dec.right = Eigen::Matrix2cd::Identity();
  dec.right(1, 1) = std::complex<double>(0.0, 1.0);
  CHECK(io::spectrum_csv(dec) == "i,re(lambda),im(lambda),modulus\n1,1,0,1\n2,0,0.5,0.5\n");
  CHECK(io::eigenvectors_csv(dec) == "phi1,phi2,phi1_im,phi2_im\n1,0,0,0\n0,0,0,1\n");

  BasinLabeling lab;
  lab.r = 2;
  lab.labels = {1, 2};
  lab.margin = {0.0, 0.5};
  lab.tie = {true, false};
  CHECK(io::labels_csv(lab) == "point_index,basin,margin,tie\n0,1,0,1\n1,2,0.5,0\n");

  SkeletonGraph g;
  g.vertices = 2;
  g.threshold = 0.1;
  g.weights = (Eigen::Matrix2d() << 0.95, 0.05, 0.0, 1.0).finished();
  CHECK(io::adjacency_csv(g) == "from,to,weight,kept\n1,1,0.94999999999999996,1\n1,2,0.050000000000000003,0\n2,2,1,1\n");

  const auto K = KernelMatrix::from_matrix(Eigen::Matrix2d::Constant(0.5));
  CHECK(io::kernel_csv(K) == "0.5,0.5\n0.5,0.5\n");
  const auto side = io::kernel_sidecar_json(K);
  CHECK(side.find("\"source\": \"explicit\"") != std::string::npos);
  CHECK(side.find("\"grid\": null") != std::string::npos);
}

TEST_CASE("file helpers") {
  const auto dir = std::filesystem::temp_directory_path() / "csmspec_test_io";
  std::filesystem::create_directories(dir);
  io::write_text(dir / "a.txt", "hello\n");
  CHECK(io::read_text(dir / "a.txt") == "hello\n");
  CHECK_CSM_ERROR(io::read_text(dir / "missing.txt"), ErrorCode::IoError);
  CHECK_CSM_ERROR(io::write_text(dir / "no" / "such" / "dir.txt", "x"), ErrorCode::IoError);
  std::filesystem::remove_all(dir);
}

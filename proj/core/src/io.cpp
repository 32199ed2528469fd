#include "csmspec/io.hpp"

#include "csmspec/error.hpp"

#include <json.hpp>

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace csmspec::io {

using nlohmann::json;

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  require(static_cast<bool>(out), ErrorCode::IoError, "cannot open " + path.string() + " for writing");
  out << text;
  require(static_cast<bool>(out), ErrorCode::IoError, "write failed for " + path.string());
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorCode::IoError, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.push_back(trim(std::string_view(line).substr(start, comma == std::string::npos ? std::string::npos : comma - start)));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

double parse_number(const std::string& s, std::size_t line) {
  double v = 0.0;
  const auto* first = s.data();
  const auto* last = s.data() + s.size();
  if (first != last && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, v);
  require(ec == std::errc() && ptr == last && !s.empty(), ErrorCode::ParseError,
          "line " + std::to_string(line) + ": '" + s + "' is not a number");
  return v;
}

Eigen::MatrixXd matrix_field(const json& j, const char* key, Eigen::Index rows, Eigen::Index cols) {
  require(j.contains(key), ErrorCode::ParseError, std::string("missing field '") + key + "'");
  const json& v = j.at(key);
  require(v.is_array(), ErrorCode::ParseError, std::string("field '") + key + "' must be an array");
  Eigen::MatrixXd m(rows, cols);
  if (!v.empty() && v.front().is_array()) {
    require(static_cast<Eigen::Index>(v.size()) == rows, ErrorCode::ShapeError, std::string("field '") + key + "' has wrong row count");
    for (Eigen::Index i = 0; i < rows; ++i) {
      const json& row = v.at(static_cast<std::size_t>(i));
      require(row.is_array() && static_cast<Eigen::Index>(row.size()) == cols, ErrorCode::ShapeError,
              std::string("field '") + key + "' has a row of wrong length");
      for (Eigen::Index c = 0; c < cols; ++c) m(i, c) = row.at(static_cast<std::size_t>(c)).get<double>();
    }
  } else {
    require(static_cast<Eigen::Index>(v.size()) == rows * cols, ErrorCode::ShapeError,
            std::string("field '") + key + "' must hold " + std::to_string(rows * cols) + " values (row-major)");
    for (Eigen::Index i = 0; i < rows; ++i)
      for (Eigen::Index c = 0; c < cols; ++c) m(i, c) = v.at(static_cast<std::size_t>(i * cols + c)).get<double>();
  }
  return m;
}

Eigen::VectorXd vector_field(const json& j, const char* key, Eigen::Index n) {
  return matrix_field(j, key, n, 1).col(0);
}

json flat(const Eigen::MatrixXd& m) {
  json a = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index c = 0; c < m.cols(); ++c) a.push_back(m(i, c));
  return a;
}

}  // namespace

PointCloud parse_point_cloud_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  require(static_cast<bool>(std::getline(in, line)), ErrorCode::ParseError, "point CSV is empty");
  if (line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF) line = line.substr(3);  // UTF-8 BOM
  const auto header = split_csv_line(line);
  std::size_t d = 0;
  bool has_label = false;
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == "x" + std::to_string(i)) {
      require(!has_label, ErrorCode::ParseError, "coordinate column after label column");
      ++d;
    } else if (header[i] == "label" && i + 1 == header.size()) {
      has_label = true;
    } else {
      throw Error(ErrorCode::ParseError, "unexpected header column '" + header[i] + "'");
    }
  }
  require(d >= 1, ErrorCode::ParseError, "header declares no coordinate columns");

  std::vector<std::vector<double>> rows;
  std::vector<int> labels;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const auto cells = split_csv_line(line);
    require(cells.size() == header.size(), ErrorCode::ParseError,
            "line " + std::to_string(lineno) + " has " + std::to_string(cells.size()) + " fields");
    std::vector<double> p(d);
    for (std::size_t k = 0; k < d; ++k) p[k] = parse_number(cells[k], lineno);
    rows.push_back(std::move(p));
    if (has_label) {
      const double l = parse_number(cells[d], lineno);
      require(l == std::floor(l), ErrorCode::ParseError, "line " + std::to_string(lineno) + ": label must be an integer");
      labels.push_back(static_cast<int>(l));
    }
  }
  require(!rows.empty(), ErrorCode::ParseError, "point CSV has no rows");

  PointCloud cloud;
  cloud.provenance = Provenance::Ingested;
  cloud.points.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(d));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t k = 0; k < d; ++k) cloud.points(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = rows[i][k];
  if (has_label) cloud.labels = std::move(labels);
  return cloud;
}

PointCloud read_point_cloud_csv(const std::filesystem::path& path) { return parse_point_cloud_csv(read_text(path)); }

std::string point_cloud_csv(const PointCloud& cloud) {
  std::ostringstream os;
  for (int k = 0; k < cloud.dim(); ++k) os << (k ? "," : "") << "x" << k;
  if (cloud.labels) os << ",label";
  os << "\n";
  for (Eigen::Index i = 0; i < cloud.points.rows(); ++i) {
    for (Eigen::Index k = 0; k < cloud.points.cols(); ++k) os << (k ? "," : "") << format_double(cloud.points(i, k));
    if (cloud.labels) os << "," << (*cloud.labels)[static_cast<std::size_t>(i)];
    os << "\n";
  }
  return os.str();
}

CSMSpec parse_csm_spec_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, e.what());
  }
  try {
    require(j.is_object(), ErrorCode::ParseError, "CSM spec must be a JSON object");
    const auto d = j.at("d").get<Eigen::Index>();
    const auto V = j.at("vocab").get<Eigen::Index>();
    require(d >= 1 && V >= 1, ErrorCode::ShapeError, "d and vocab must be >= 1");
    const std::string decoder = j.value("decoder", std::string("softmax"));
    require(decoder == "softmax" || decoder == "gaussian", ErrorCode::ParseError,
            "decoder must be \"softmax\" or \"gaussian\"");
    std::optional<StateBox> box;
    if (j.contains("box"))
      box = StateBox(vector_field(j.at("box"), "lower", d), vector_field(j.at("box"), "upper", d));
    return CSMSpec(matrix_field(j, "A", d, d), matrix_field(j, "B", d, V), matrix_field(j, "logits", V, d),
                   decoder == "gaussian" ? DecoderMode::GaussianLogit : DecoderMode::Softmax,
                   j.value("sigma_dec", 0.0), j.contains("s0") ? vector_field(j, "s0", d) : Eigen::VectorXd::Zero(d),
                   box);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, e.what());
  }
}

CSMSpec read_csm_spec_json(const std::filesystem::path& path) { return parse_csm_spec_json(read_text(path)); }

std::string csm_spec_json(const CSMSpec& spec) {
  json j;
  j["d"] = spec.dim();
  j["vocab"] = spec.vocab();
  j["A"] = flat(spec.A());
  j["B"] = flat(spec.B());
  j["logits"] = flat(spec.logits());
  j["decoder"] = spec.decoder() == DecoderMode::GaussianLogit ? "gaussian" : "softmax";
  j["sigma_dec"] = spec.sigma_dec();
  j["s0"] = flat(spec.s0());
  j["box"] = {{"lower", flat(spec.box().lower())}, {"upper", flat(spec.box().upper())}};
  return j.dump(2) + "\n";
}

std::string trajectory_csv(const Trajectory& trajectory) {
  std::ostringstream os;
  const auto d = trajectory.states.empty() ? 0 : trajectory.states.front().size();
  const auto V = trajectory.controls.empty() ? 0 : trajectory.controls.front().size();
  os << "t";
  for (Eigen::Index k = 0; k < d; ++k) os << ",s" << k;
  for (Eigen::Index k = 0; k < V; ++k) os << ",u" << k;
  os << "\n";
  for (std::size_t t = 0; t < trajectory.states.size(); ++t) {
    os << t;
    for (Eigen::Index k = 0; k < d; ++k) os << "," << format_double(trajectory.states[t][k]);
    for (Eigen::Index k = 0; k < V; ++k) os << "," << format_double(trajectory.controls[t][k]);
    os << "\n";
  }
  return os.str();
}

std::string kernel_csv(const KernelMatrix& K) {
  std::ostringstream os;
  for (Eigen::Index i = 0; i < K.P.rows(); ++i) {
    for (Eigen::Index j = 0; j < K.P.cols(); ++j) os << (j ? "," : "") << format_double(K.P(i, j));
    os << "\n";
  }
  return os.str();
}

std::string kernel_sidecar_json(const KernelMatrix& K) {
  json j;
  j["source"] = to_string(K.source);
  j["size"] = K.size();
  j["seed"] = K.seed;
  if (K.source == KernelSource::Diffusion) {
    j["sigma"] = K.bandwidth;
    j["variant"] = to_string(K.variant);
  } else {
    j["sigma"] = nullptr;
    j["variant"] = nullptr;
  }
  if (K.grid) {
    json g;
    g["lower"] = flat(K.grid->box().lower());
    g["upper"] = flat(K.grid->box().upper());
    g["cells_per_dim"] = K.grid->cells_per_dim();
    j["grid"] = g;
  } else {
    j["grid"] = nullptr;
  }
  j["warnings"] = K.warnings;
  return j.dump(2) + "\n";
}

std::string spectrum_csv(const SpectralDecomposition& dec) {
  std::ostringstream os;
  os << "i,re(lambda),im(lambda),modulus\n";
  for (Eigen::Index i = 0; i < dec.values.size(); ++i)
    os << i + 1 << "," << format_double(dec.values[i].real()) << "," << format_double(dec.values[i].imag()) << ","
       << format_double(std::abs(dec.values[i])) << "\n";
  return os.str();
}

std::string eigenvectors_csv(const SpectralDecomposition& dec) {
  std::ostringstream os;
  const bool complex = !dec.is_real();
  const auto k = dec.right.cols();
  for (Eigen::Index j = 0; j < k; ++j) os << (j ? "," : "") << "phi" << j + 1;
  if (complex)
    for (Eigen::Index j = 0; j < k; ++j) os << ",phi" << j + 1 << "_im";
  os << "\n";
  for (Eigen::Index i = 0; i < dec.right.rows(); ++i) {
    for (Eigen::Index j = 0; j < k; ++j) os << (j ? "," : "") << format_double(dec.right(i, j).real());
    if (complex)
      for (Eigen::Index j = 0; j < k; ++j) os << "," << format_double(dec.right(i, j).imag());
    os << "\n";
  }
  return os.str();
}

std::string labels_csv(const BasinLabeling& labeling) {
  std::ostringstream os;
  os << "point_index,basin,margin,tie\n";
  for (std::size_t i = 0; i < labeling.size(); ++i)
    os << i << "," << labeling.labels[i] << "," << format_double(labeling.margin[i]) << "," << (labeling.tie[i] ? 1 : 0)
       << "\n";
  return os.str();
}

std::string coordinates_csv(const SpectralCoordinates& coords) {
  std::ostringstream os;
  os << "point_index";
  for (Eigen::Index j = 0; j < coords.coords.cols(); ++j) os << ",phi" << j + 1;
  os << "\n";
  for (Eigen::Index i = 0; i < coords.coords.rows(); ++i) {
    os << i;
    for (Eigen::Index j = 0; j < coords.coords.cols(); ++j) os << "," << format_double(coords.coords(i, j));
    os << "\n";
  }
  return os.str();
}

std::string adjacency_csv(const SkeletonGraph& graph) {
  std::ostringstream os;
  os << "from,to,weight,kept\n";
  for (Eigen::Index i = 0; i < graph.weights.rows(); ++i)
    for (Eigen::Index j = 0; j < graph.weights.cols(); ++j)
      if (graph.weights(i, j) > 0.0)
        os << i + 1 << "," << j + 1 << "," << format_double(graph.weights(i, j)) << ","
           << (graph.weights(i, j) >= graph.threshold ? 1 : 0) << "\n";
  return os.str();
}

}  // namespace csmspec::io

#include "fsbgl/io.hpp"

#include <unistd.h>

#include <cerrno>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <sstream>

#include "fsbgl/simlab.hpp"

namespace fsbgl {

namespace fs = std::filesystem;

namespace {

double parse_double(const std::string& s, const std::string& where) {
  char* end = nullptr;
  errno = 0;
  const double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0' || errno == ERANGE)
    throw io_error("cannot parse number '" + s + "' in " + where);
  return v;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

bool looks_numeric(const std::string& s) {
  char* end = nullptr;
  std::strtod(s.c_str(), &end);
  return end != s.c_str() && *end == '\0';
}

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t");
  std::size_t b = s.find_last_not_of(" \t");
  return a == std::string::npos ? "" : s.substr(a, b - a + 1);
}

}  // namespace

std::string read_text(const fs::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw io_error("cannot open " + file.string());
  std::ostringstream os;
  os << in.rdbuf();
  if (in.bad()) throw io_error("read failed: " + file.string());
  return os.str();
}

void write_text_atomic(const fs::path& file, const std::string& content) {
  const fs::path parent = file.parent_path();
  std::error_code ec;
  if (!parent.empty()) fs::create_directories(parent, ec);
  const fs::path tmp =
      file.string() + ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw io_error("cannot create " + tmp.string());
    out << content;
    out.flush();
    if (!out) {
      fs::remove(tmp, ec);
      throw io_error("write failed: " + tmp.string());
    }
  }
  fs::rename(tmp, file, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw io_error("rename failed for " + file.string());
  }
}

void write_matrix_csv(const fs::path& file, const Eigen::MatrixXd& M,
                      const std::vector<std::string>& header) {
  std::ostringstream os;
  if (!header.empty()) {
    if (static_cast<Eigen::Index>(header.size()) != M.cols())
      throw domain_error("matrix csv: header width mismatch");
    for (std::size_t c = 0; c < header.size(); ++c)
      os << (c ? "," : "") << header[c];
    os << "\n";
  }
  for (Eigen::Index r = 0; r < M.rows(); ++r) {
    for (Eigen::Index c = 0; c < M.cols(); ++c)
      os << (c ? "," : "") << format_g17(M(r, c));
    os << "\n";
  }
  write_text_atomic(file, os.str());
}

Eigen::MatrixXd read_matrix_csv(const fs::path& file,
                                std::vector<std::string>* header) {
  const std::string text = read_text(file);
  std::istringstream in(text);
  std::string line;
  std::vector<std::vector<double>> rows;
  Eigen::Index cols = -1;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    const auto fields = split_csv_line(line);
    if (first) {
      first = false;
      if (!looks_numeric(fields[0])) {
        if (header) *header = fields;
        cols = static_cast<Eigen::Index>(fields.size());
        continue;
      }
      if (header) header->clear();
    }
    if (cols < 0) cols = static_cast<Eigen::Index>(fields.size());
    if (static_cast<Eigen::Index>(fields.size()) != cols)
      throw io_error("ragged csv row in " + file.string());
    std::vector<double> row(fields.size());
    for (std::size_t c = 0; c < fields.size(); ++c)
      row[c] = parse_double(fields[c], file.string());
    rows.push_back(std::move(row));
  }
  if (rows.empty()) {
    if (cols > 0) return Eigen::MatrixXd(0, cols);  // header-only file
    throw io_error("empty csv: " + file.string());
  }
  Eigen::MatrixXd M(static_cast<Eigen::Index>(rows.size()), cols);
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (Eigen::Index c = 0; c < cols; ++c) M(r, c) = rows[r][c];
  return M;
}

void write_points_csv(const fs::path& file, const PointSet& pts) {
  write_matrix_csv(file, pts, {"x", "y"});
}

PointSet read_points_csv(const fs::path& file) {
  const Eigen::MatrixXd M = read_matrix_csv(file);
  if (M.cols() != 2) throw io_error("points csv must have 2 columns");
  return M;
}

void write_triplets_csv(const fs::path& file, const SparseSymmetric& M) {
  std::ostringstream os;
  os << "row,col,value\n";
  os << "# n = " << M.n << "\n";
  for (const auto& e : M.entries)
    os << e.row << "," << e.col << "," << format_g17(e.value) << "\n";
  write_text_atomic(file, os.str());
}

SparseSymmetric read_triplets_csv(const fs::path& file) {
  const std::string text = read_text(file);
  std::istringstream in(text);
  std::string line;
  SparseSymmetric M;
  M.n = 0;
  bool have_n = false;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    if (line[0] == '#') {
      const auto eq = line.find('=');
      if (eq != std::string::npos) {
        M.n = static_cast<int>(
            parse_double(trim(line.substr(eq + 1)), file.string()));
        have_n = true;
      }
      continue;
    }
    if (line.rfind("row,", 0) == 0) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != 3)
      throw io_error("triplet csv row needs 3 fields: " + file.string());
    M.entries.push_back(
        {static_cast<int>(parse_double(fields[0], file.string())),
         static_cast<int>(parse_double(fields[1], file.string())),
         parse_double(fields[2], file.string())});
  }
  if (!have_n) {
    for (const auto& e : M.entries)
      M.n = std::max(M.n, std::max(e.row, e.col) + 1);
  }
  M.normalize();
  return M;
}

void KeyValueFile::set(const std::string& key, const std::string& value) {
  for (auto& kv : items)
    if (kv.first == key) {
      kv.second = value;
      return;
    }
  items.emplace_back(key, value);
}

void KeyValueFile::set(const std::string& key, double value) {
  set(key, format_g17(value));
}

void KeyValueFile::set(const std::string& key, long long value) {
  set(key, std::to_string(value));
}

bool KeyValueFile::has(const std::string& key) const {
  for (const auto& kv : items)
    if (kv.first == key) return true;
  return false;
}

const std::string& KeyValueFile::get(const std::string& key) const {
  for (const auto& kv : items)
    if (kv.first == key) return kv.second;
  throw io_error("missing key '" + key + "'");
}

std::string KeyValueFile::get_or(const std::string& key,
                                 const std::string& dflt) const {
  return has(key) ? get(key) : dflt;
}

double KeyValueFile::get_double(const std::string& key) const {
  return parse_double(get(key), "key '" + key + "'");
}

long long KeyValueFile::get_int(const std::string& key) const {
  return static_cast<long long>(get_double(key));
}

std::string KeyValueFile::serialize() const {
  std::ostringstream os;
  for (const auto& kv : items) os << kv.first << " = " << kv.second << "\n";
  return os.str();
}

KeyValueFile KeyValueFile::parse(const std::string& text) {
  KeyValueFile out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#' || t[0] == '[') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      throw io_error("malformed key = value line: " + t);
    out.set(trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
  }
  return out;
}

std::string metric_name(Metric metric) {
  switch (metric) {
    case Metric::Euclidean: return "euclidean";
    case Metric::Chordal: return "chordal";
    case Metric::GreatCircle: return "great_circle";
  }
  throw domain_error("unknown metric");
}

Metric metric_from_name(const std::string& name) {
  if (name == "euclidean") return Metric::Euclidean;
  if (name == "chordal") return Metric::Chordal;
  if (name == "great_circle") return Metric::GreatCircle;
  throw domain_error("unknown metric: " + name);
}

void write_spec_file(const fs::path& file, const SmallScaleSpec& spec) {
  KeyValueFile kv;
  kv.set("family", family_name(spec.family));
  kv.set("metric", metric_name(spec.metric));
  const auto names = family_param_names(spec.family, spec.params.size());
  if (names.size() != spec.params.size())
    throw domain_error("spec file: unexpected parameter count");
  for (std::size_t p = 0; p < names.size(); ++p)
    kv.set(names[p], spec.params[p]);
  kv.set("tau2", spec.tau2);
  write_text_atomic(file, kv.serialize());
}

SmallScaleSpec read_spec_file(const fs::path& file) {
  const KeyValueFile kv = KeyValueFile::parse(read_text(file));
  SmallScaleSpec spec;
  spec.family = family_from_name(kv.get("family"));
  spec.metric = metric_from_name(kv.get_or("metric", "euclidean"));
  const std::size_t count =
      spec.family == Family::WendlandMixture ? (kv.has("alpha2") ? 4 : 2)
      : spec.family == Family::TaperedMatern ? 4
      : spec.family == Family::GaspariCohn   ? 2
                                             : 0;
  const auto names = family_param_names(spec.family, count);
  spec.params.resize(names.size());
  for (std::size_t p = 0; p < names.size(); ++p)
    spec.params[p] = kv.get_double(names[p]);
  spec.tau2 = kv.get_double("tau2");
  spec.validate();
  return spec;
}

void write_model_files(const fs::path& dir, const FittedModel& model) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  KeyValueFile kv;
  kv.set("family", family_name(model.spec.family));
  kv.set("metric", metric_name(model.spec.metric));
  const auto names =
      family_param_names(model.spec.family, model.spec.params.size());
  for (std::size_t p = 0; p < names.size(); ++p)
    kv.set(names[p], model.spec.params[p]);
  kv.set("tau2", model.spec.tau2);
  kv.set("basis", basis_kind_name(model.basis.kind));
  kv.set("basis_m_max", static_cast<long long>(model.basis.m_max));
  kv.set("basis_levels", static_cast<long long>(model.basis.levels));
  kv.set("basis_overlap", model.basis.overlap);
  kv.set("lambda", model.lambda);
  kv.set("alpha", model.alpha);
  write_text_atomic(dir / "model.ini", kv.serialize());
  write_triplets_csv(dir / "Q.csv",
                     SparseSymmetric::from_dense(model.Q, 0.0));
}

FittedModel read_model_files(const fs::path& dir) {
  const KeyValueFile kv = KeyValueFile::parse(read_text(dir / "model.ini"));
  FittedModel model;
  model.spec.family = family_from_name(kv.get("family"));
  model.spec.metric = metric_from_name(kv.get_or("metric", "euclidean"));
  const std::size_t count =
      model.spec.family == Family::WendlandMixture ? (kv.has("alpha2") ? 4 : 2)
      : model.spec.family == Family::TaperedMatern ? 4
      : model.spec.family == Family::GaspariCohn   ? 2
                                                   : 0;
  const auto names = family_param_names(model.spec.family, count);
  model.spec.params.resize(names.size());
  for (std::size_t p = 0; p < names.size(); ++p)
    model.spec.params[p] = kv.get_double(names[p]);
  model.spec.tau2 = kv.get_double("tau2");
  model.spec.validate();
  model.basis.kind = basis_kind_from_name(kv.get("basis"));
  model.basis.m_max = static_cast<int>(kv.get_int("basis_m_max"));
  model.basis.levels = static_cast<int>(kv.get_int("basis_levels"));
  model.basis.overlap = kv.get_double("basis_overlap");
  model.lambda = kv.get_double("lambda");
  model.alpha = kv.get_double("alpha");
  model.Q = read_triplets_csv(dir / "Q.csv").to_dense();
  return model;
}

}  // namespace fsbgl

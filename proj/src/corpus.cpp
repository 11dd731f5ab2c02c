#include "qsrf/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

#include "qsrf/rng.hpp"

namespace qsrf {
namespace {

std::runtime_error parse_error(const std::string& path, std::size_t line_no,
                               const std::string& what) {
  std::ostringstream os;
  os << path << ":" << line_no << ": " << what;
  return std::runtime_error(os.str());
}

// Parses "key=<int>" out of a header token like "#users=123".
bool header_value(const std::string& token, const char* key, long& out) {
  std::string prefix = std::string(key) + "=";
  std::size_t pos = token.find(prefix);
  if (pos == std::string::npos) return false;
  out = std::strtol(token.c_str() + pos + prefix.size(), nullptr, 10);
  return true;
}

bool parse_two_ints(const std::string& line, long& a, long& b) {
  std::size_t tab = line.find('\t');
  if (tab == std::string::npos) return false;
  char* end = nullptr;
  a = std::strtol(line.c_str(), &end, 10);
  if (end != line.c_str() + tab) return false;
  const char* second = line.c_str() + tab + 1;
  b = std::strtol(second, &end, 10);
  if (*end != '\0' && *end != '\r') return false;
  return end != second;
}

}  // namespace

InteractionLog load_interactions(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open interactions file: " + path);

  InteractionLog log;
  long header_users = -1, header_items = -1;
  std::unordered_set<std::uint64_t> seen;
  std::string line;
  std::size_t line_no = 0;
  long max_user = -1, max_item = -1;

  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    if (line[0] == '#') {
      long v;
      if (header_value(line, "users", v)) header_users = v;
      if (header_value(line, "items", v)) header_items = v;
      continue;
    }
    long u, i;
    if (!parse_two_ints(line, u, i) || u < 0 || i < 0)
      throw parse_error(path, line_no, "expected `user<TAB>item`");
    std::uint64_t key =
        (static_cast<std::uint64_t>(u) << 32) | static_cast<std::uint32_t>(i);
    if (!seen.insert(key).second) continue;
    log.entries.push_back({static_cast<std::int32_t>(u),
                           static_cast<std::int32_t>(i)});
    max_user = std::max(max_user, u);
    max_item = std::max(max_item, i);
  }
  if (log.entries.empty())
    throw std::runtime_error("empty interactions file: " + path);

  log.n_users = static_cast<std::int32_t>(
      header_users >= 0 ? header_users : max_user + 1);
  log.n_items = static_cast<std::int32_t>(
      header_items >= 0 ? header_items : max_item + 1);
  if (max_user >= log.n_users || max_item >= log.n_items)
    throw std::runtime_error(path + ": id outside declared header bounds");
  return log;
}

void save_interactions(const InteractionLog& log, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write interactions file: " + path);
  out << "#users=" << log.n_users << " items=" << log.n_items << "\n";
  for (const Interaction& e : log.entries)
    out << e.user << '\t' << e.item << '\n';
}

SparseMatrix load_tag_matrix(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open tag matrix file: " + path);

  long n_items = -1, n_tags = -1;
  std::vector<Eigen::Triplet<double>> triplets;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    if (line[0] == '#') {
      long v;
      if (header_value(line, "items", v)) n_items = v;
      if (header_value(line, "tags", v)) n_tags = v;
      continue;
    }
    std::istringstream ls(line);
    long item, tag;
    double value;
    if (!(ls >> item >> tag >> value) || item < 0 || tag < 0)
      throw parse_error(path, line_no, "expected `item<TAB>tag<TAB>value`");
    triplets.emplace_back(item, tag, value);
  }
  if (n_items < 0 || n_tags < 0)
    throw std::runtime_error(path + ": missing `#items=<n> tags=<m>` header");

  SparseMatrix m(n_items, n_tags);
  m.setFromTriplets(triplets.begin(), triplets.end());
  m.makeCompressed();
  return m;
}

void save_tag_matrix(const SparseMatrix& tags, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write tag matrix file: " + path);
  out << "#items=" << tags.rows() << " tags=" << tags.cols() << "\n";
  for (Index i = 0; i < tags.outerSize(); ++i)
    for (SparseMatrix::InnerIterator it(tags, i); it; ++it)
      out << it.row() << '\t' << it.col() << '\t' << it.value() << '\n';
}

SparseMatrix tfidf(const SparseMatrix& tags) {
  const Index n_rows = tags.rows();
  const Index n_cols = tags.cols();

  Eigen::VectorXd df = Eigen::VectorXd::Zero(n_cols);
  for (Index i = 0; i < tags.outerSize(); ++i)
    for (SparseMatrix::InnerIterator it(tags, i); it; ++it)
      if (it.value() != 0.0) df[it.col()] += 1.0;

  Eigen::VectorXd idf(n_cols);
  for (Index j = 0; j < n_cols; ++j)
    idf[j] = std::log((1.0 + static_cast<double>(n_rows)) / (1.0 + df[j])) + 1.0;

  SparseMatrix out = tags;
  for (Index i = 0; i < out.outerSize(); ++i) {
    double norm_sq = 0.0;
    for (SparseMatrix::InnerIterator it(out, i); it; ++it) {
      it.valueRef() *= idf[it.col()];
      norm_sq += it.value() * it.value();
    }
    if (norm_sq > 0.0) {
      const double inv = 1.0 / std::sqrt(norm_sq);
      for (SparseMatrix::InnerIterator it(out, i); it; ++it)
        it.valueRef() *= inv;
    }
  }
  return out;
}

Split stratified_split(const InteractionLog& log, std::uint64_t seed) {
  std::vector<std::vector<std::int32_t>> per_user(
      static_cast<std::size_t>(log.n_users));
  for (std::size_t r = 0; r < log.entries.size(); ++r)
    per_user[static_cast<std::size_t>(log.entries[r].user)].push_back(
        static_cast<std::int32_t>(r));

  Split split;
  for (std::int32_t u = 0; u < log.n_users; ++u) {
    auto& rows = per_user[static_cast<std::size_t>(u)];
    if (rows.empty()) continue;
    const auto n = static_cast<std::int64_t>(rows.size());
    if (n == 1) {
      split.train.rows.push_back(rows[0]);
      ++split.single_interaction_users;
      continue;
    }
    auto rng = make_rng(derive_seed(seed, stream::kSplit,
                                    static_cast<std::uint64_t>(u)));
    std::shuffle(rows.begin(), rows.end(), rng);

    // 80/20 hold-out for test, then 80/20 of the remainder for validation,
    // floors throughout; train never drops below one row.
    std::int64_t n_trainval = (n * 8) / 10;
    std::int64_t n_train = std::max<std::int64_t>(1, (n_trainval * 8) / 10);
    std::int64_t n_valid = n_trainval - n_train;
    for (std::int64_t i = 0; i < n; ++i) {
      if (i < n_train)
        split.train.rows.push_back(rows[static_cast<std::size_t>(i)]);
      else if (i < n_train + n_valid)
        split.valid.rows.push_back(rows[static_cast<std::size_t>(i)]);
      else
        split.test.rows.push_back(rows[static_cast<std::size_t>(i)]);
    }
  }
  if (split.single_interaction_users > 0)
    std::fprintf(stderr,
                 "[split] %d user(s) with a single interaction assigned "
                 "entirely to train\n",
                 split.single_interaction_users);
  return split;
}

}  // namespace qsrf

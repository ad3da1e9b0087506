#include "scmp/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>

namespace scmp {

const std::vector<double>& EmbeddingTable::vec(const std::string& id) const {
  auto it = vectors.find(id);
  if (it == vectors.end()) throw std::out_of_range("unknown item id: " + id);
  return it->second;
}

std::string EmbeddingTable::category_of(const std::string& id) const {
  auto it = category.find(id);
  return it == category.end() ? "-" : it->second;
}

std::string EmbeddingTable::style_of(const std::string& id) const {
  auto it = style.find(id);
  return it == style.end() ? "-" : it->second;
}

static std::vector<std::string> split_on(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

EmbeddingTable load_embeddings(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw parse_error("cannot open embedding file: " + path);
  std::string line;
  if (!std::getline(is, line) || line.rfind("#dim ", 0) != 0)
    throw parse_error(path + ":1: expected '#dim <L>' header");
  EmbeddingTable table;
  table.dim = std::stoi(line.substr(5));
  if (table.dim <= 0) throw parse_error(path + ":1: dim must be positive");

  int lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> fields = split_on(line, '\t');
    if (fields.size() != 4)
      throw parse_error(path + ":" + std::to_string(lineno) +
                        ": expected 4 tab-separated fields");
    const std::string& id = fields[0];
    if (table.has(id))
      throw parse_error(path + ":" + std::to_string(lineno) + ": duplicate item id " + id);
    std::istringstream vs(fields[3]);
    std::vector<double> v;
    double x;
    while (vs >> x) v.push_back(x);
    if (!vs.eof())
      throw parse_error(path + ":" + std::to_string(lineno) + ": bad float token");
    if (static_cast<int>(v.size()) != table.dim)
      throw parse_error(path + ":" + std::to_string(lineno) + ": row has " +
                        std::to_string(v.size()) + " values, expected " +
                        std::to_string(table.dim));
    for (double val : v)
      if (!std::isfinite(val))
        throw parse_error(path + ":" + std::to_string(lineno) + ": non-finite value");
    table.ids.push_back(id);
    table.vectors[id] = std::move(v);
    table.category[id] = fields[1];
    table.style[id] = fields[2];
  }
  return table;
}

void save_embeddings(const EmbeddingTable& table, const std::string& path) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw std::runtime_error("cannot write " + path);
  os << "#dim " << table.dim << "\n";
  os.precision(17);
  for (const std::string& id : table.ids) {
    os << id << '\t' << table.category_of(id) << '\t' << table.style_of(id) << '\t';
    const std::vector<double>& v = table.vec(id);
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (i) os << ' ';
      os << v[i];
    }
    os << '\n';
  }
}

SetManifest load_manifest(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw parse_error("cannot open manifest file: " + path);
  SetManifest m;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> fields = split_on(line, '\t');
    if (fields.size() != 2)
      throw parse_error(path + ":" + std::to_string(lineno) + ": expected 2 fields");
    std::vector<std::string> items = split_on(fields[1], ',');
    if (items.size() < 2) {
      std::cerr << "warning: dropping singleton set " << fields[0] << "\n";
      continue;
    }
    m.sets.emplace_back(fields[0], std::move(items));
  }
  return m;
}

void save_manifest(const SetManifest& manifest, const std::string& path) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw std::runtime_error("cannot write " + path);
  for (const auto& [id, items] : manifest.sets) {
    os << id << '\t';
    for (std::size_t i = 0; i < items.size(); ++i) {
      if (i) os << ',';
      os << items[i];
    }
    os << '\n';
  }
}

std::vector<EnsembleSample> load_ensembles(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw parse_error("cannot open ensemble file: " + path);
  std::vector<EnsembleSample> out;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> fields = split_on(line, '\t');
    if (fields.size() != 2)
      throw parse_error(path + ":" + std::to_string(lineno) + ": expected 2 fields");
    EnsembleSample s;
    s.label = std::stoi(fields[0]);
    if (s.label != 0 && s.label != 1)
      throw parse_error(path + ":" + std::to_string(lineno) + ": label must be 0 or 1");
    s.item_ids = split_on(fields[1], ',');
    out.push_back(std::move(s));
  }
  return out;
}

void save_ensembles(const std::vector<EnsembleSample>& samples, const std::string& path) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw std::runtime_error("cannot write " + path);
  for (const EnsembleSample& s : samples) {
    os << s.label << '\t';
    for (std::size_t i = 0; i < s.item_ids.size(); ++i) {
      if (i) os << ',';
      os << s.item_ids[i];
    }
    os << '\n';
  }
}

std::vector<FitbQuestion> load_fitb(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw parse_error("cannot open FITB file: " + path);
  std::vector<FitbQuestion> out;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> fields = split_on(line, '\t');
    if (fields.size() != 3)
      throw parse_error(path + ":" + std::to_string(lineno) + ": expected 3 fields");
    FitbQuestion q;
    q.partial_set = split_on(fields[0], ',');
    std::vector<std::string> cs = split_on(fields[1], ',');
    if (cs.size() != 4)
      throw parse_error(path + ":" + std::to_string(lineno) + ": expected 4 choices");
    std::copy(cs.begin(), cs.end(), q.choices.begin());
    q.answer_index = std::stoi(fields[2]);
    if (q.answer_index < 0 || q.answer_index > 3)
      throw parse_error(path + ":" + std::to_string(lineno) + ": answer index out of range");
    out.push_back(std::move(q));
  }
  return out;
}

void save_fitb(const std::vector<FitbQuestion>& questions, const std::string& path) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw std::runtime_error("cannot write " + path);
  for (const FitbQuestion& q : questions) {
    for (std::size_t i = 0; i < q.partial_set.size(); ++i) {
      if (i) os << ',';
      os << q.partial_set[i];
    }
    os << '\t';
    for (std::size_t i = 0; i < q.choices.size(); ++i) {
      if (i) os << ',';
      os << q.choices[i];
    }
    os << '\t' << q.answer_index << '\n';
  }
}

static std::vector<std::string> sample_distinct(const std::vector<std::string>& pool,
                                                int n, std::mt19937_64& rng) {
  std::vector<std::string> work = pool;
  std::vector<std::string> out;
  for (int i = 0; i < n; ++i) {
    std::uniform_int_distribution<std::size_t> pick(0, work.size() - 1);
    std::size_t j = pick(rng);
    out.push_back(work[j]);
    work[j] = work.back();
    work.pop_back();
  }
  return out;
}

std::vector<EnsembleSample> sample_style_ensembles(const EmbeddingTable& table,
                                                   int count, int min_len, int max_len,
                                                   std::uint64_t seed) {
  if (min_len < 2 || max_len < min_len)
    throw std::invalid_argument("sample_style_ensembles: bad length range");
  std::map<std::string, std::vector<std::string>> by_style;
  for (const std::string& id : table.ids) {
    std::string st = table.style_of(id);
    if (st != "-") by_style[st].push_back(id);
  }
  // positives draw only from styles with enough items for the longest set
  std::vector<std::string> styles;
  for (const auto& [st, items] : by_style)
    if (static_cast<int>(items.size()) >= max_len) styles.push_back(st);
  if (styles.size() < 2)
    throw std::invalid_argument(
        "sample_style_ensembles: need at least 2 styles with >= " +
        std::to_string(max_len) + " items each, found " + std::to_string(styles.size()));

  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> len_dist(min_len, max_len);
  std::uniform_int_distribution<std::size_t> style_dist(0, styles.size() - 1);
  std::vector<EnsembleSample> out;

  for (int i = 0; i < count; ++i) {
    const std::string& st = styles[style_dist(rng)];
    int len = len_dist(rng);
    EnsembleSample s;
    s.item_ids = sample_distinct(by_style[st], len, rng);
    s.label = 1;
    s.provenance = st;
    out.push_back(std::move(s));
  }
  for (int i = 0; i < count; ++i) {
    int len = len_dist(rng);
    EnsembleSample s;
    // redraw until at least two styles appear
    for (;;) {
      s.item_ids = sample_distinct(table.ids, len, rng);
      std::set<std::string> seen;
      for (const std::string& id : s.item_ids) seen.insert(table.style_of(id));
      if (seen.size() >= 2) break;
    }
    s.label = 0;
    s.provenance = "negative-random";
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<EnsembleSample> sample_collection_ensembles(const SetManifest& sets,
                                                        int max_positives,
                                                        std::uint64_t seed) {
  if (sets.sets.size() < 2)
    throw std::invalid_argument("sample_collection_ensembles: need at least 2 sets");
  std::vector<EnsembleSample> out;
  std::unordered_map<std::string, std::string> source_of;
  std::vector<std::string> all_items;
  for (const auto& [sid, items] : sets.sets)
    for (const std::string& id : items) {
      if (!source_of.count(id)) all_items.push_back(id);
      source_of[id] = sid;
    }

  int taken = 0;
  std::vector<int> pos_lengths;
  for (const auto& [sid, items] : sets.sets) {
    if (items.size() < 2) continue;
    if (max_positives > 0 && taken >= max_positives) break;
    out.push_back(EnsembleSample{items, 1, sid});
    pos_lengths.push_back(static_cast<int>(items.size()));
    ++taken;
  }

  std::mt19937_64 rng(seed);
  for (int len : pos_lengths) {
    EnsembleSample s;
    for (;;) {
      s.item_ids = sample_distinct(all_items, std::min<int>(len, static_cast<int>(all_items.size())), rng);
      std::set<std::string> sources;
      for (const std::string& id : s.item_ids) sources.insert(source_of[id]);
      if (sources.size() >= 2) break;
    }
    s.label = 0;
    s.provenance = "negative-random";
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<FitbQuestion> make_fitb_questions(
    const std::vector<std::vector<std::string>>& sets, const EmbeddingTable& table,
    std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<FitbQuestion> out;
  for (const std::vector<std::string>& set : sets) {
    if (set.size() < 3) continue;  // partial set must stay a scorable graph
    std::uniform_int_distribution<std::size_t> pick(0, set.size() - 1);
    std::size_t blank = pick(rng);
    const std::string& answer = set[blank];
    std::string cat = table.category_of(answer);
    std::string sty = table.style_of(answer);

    std::vector<std::string> pool;
    for (const std::string& id : table.ids) {
      if (id == answer) continue;
      if (std::find(set.begin(), set.end(), id) != set.end()) continue;
      if (table.category_of(id) != cat) continue;
      if (sty != "-" && table.style_of(id) == sty) continue;
      pool.push_back(id);
    }
    if (pool.size() < 3) {
      std::cerr << "warning: skipping FITB question, only " << pool.size()
                << " eligible distractors for category " << cat << "\n";
      continue;
    }
    std::vector<std::string> distractors = sample_distinct(pool, 3, rng);

    FitbQuestion q;
    for (std::size_t i = 0; i < set.size(); ++i)
      if (i != blank) q.partial_set.push_back(set[i]);
    std::uniform_int_distribution<int> pos(0, 3);
    q.answer_index = pos(rng);
    int d = 0;
    for (int i = 0; i < 4; ++i)
      q.choices[static_cast<std::size_t>(i)] = (i == q.answer_index) ? answer : distractors[static_cast<std::size_t>(d++)];
    out.push_back(std::move(q));
  }
  return out;
}

EmbeddingTable generate_synthetic(int num_styles, int items_per_style, int dim,
                                  double noise_sigma, std::uint64_t seed) {
  if (num_styles < 2) throw std::invalid_argument("generate_synthetic: need >= 2 styles");
  if (dim < num_styles)
    throw std::invalid_argument("generate_synthetic: dim " + std::to_string(dim) +
                                " < num_styles " + std::to_string(num_styles) +
                                ", orthogonal anchors impossible");
  static const char* kCategories[] = {"chair", "table", "lamp", "sofa", "bed", "dresser"};
  constexpr int kNumCategories = 6;

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, noise_sigma);
  EmbeddingTable table;
  table.dim = dim;
  for (int s = 0; s < num_styles; ++s) {
    std::string style_name = "style" + std::to_string(s);
    for (int j = 0; j < items_per_style; ++j) {
      std::string id = "s" + std::to_string(s) + "_i" + std::to_string(j);
      std::vector<double> v(static_cast<std::size_t>(dim), 0.0);
      v[static_cast<std::size_t>(s)] = 1.0;  // orthonormal anchor
      if (noise_sigma > 0.0)
        for (double& x : v) x += noise(rng);
      table.ids.push_back(id);
      table.vectors[id] = std::move(v);
      table.style[id] = style_name;
      table.category[id] = kCategories[j % kNumCategories];
    }
  }
  return table;
}

std::vector<std::vector<std::string>> split_items(const std::vector<std::string>& ids,
                                                  const std::vector<double>& ratios,
                                                  std::uint64_t seed) {
  std::vector<std::string> shuffled = ids;
  std::mt19937_64 rng(seed);
  std::shuffle(shuffled.begin(), shuffled.end(), rng);
  std::vector<std::vector<std::string>> out(ratios.size());
  double total = 0.0;
  for (double r : ratios) total += r;
  std::size_t start = 0;
  for (std::size_t i = 0; i < ratios.size(); ++i) {
    std::size_t n = (i + 1 == ratios.size())
                        ? shuffled.size() - start
                        : static_cast<std::size_t>(ratios[i] / total * shuffled.size());
    out[i].assign(shuffled.begin() + static_cast<std::ptrdiff_t>(start),
                  shuffled.begin() + static_cast<std::ptrdiff_t>(start + n));
    start += n;
  }
  // partition hygiene
  std::set<std::string> seen;
  for (const auto& part : out)
    for (const std::string& id : part)
      if (!seen.insert(id).second)
        throw std::logic_error("split_items: id appears in two partitions: " + id);
  return out;
}

std::vector<std::vector<std::string>> split_items_stratified(const EmbeddingTable& table,
                                                             const std::vector<double>& ratios,
                                                             std::uint64_t seed) {
  std::map<std::string, std::vector<std::string>> by_style;
  for (const std::string& id : table.ids) by_style[table.style_of(id)].push_back(id);
  std::vector<std::vector<std::string>> out(ratios.size());
  std::uint64_t style_index = 0;
  for (const auto& [st, ids] : by_style) {
    auto parts = split_items(ids, ratios, seed + style_index++);
    for (std::size_t i = 0; i < parts.size(); ++i)
      out[i].insert(out[i].end(), parts[i].begin(), parts[i].end());
  }
  return out;
}

EmbeddingTable subset_table(const EmbeddingTable& table,
                            const std::vector<std::string>& ids) {
  EmbeddingTable out;
  out.dim = table.dim;
  for (const std::string& id : ids) {
    out.ids.push_back(id);
    out.vectors[id] = table.vec(id);
    out.category[id] = table.category_of(id);
    out.style[id] = table.style_of(id);
  }
  return out;
}

SetGraph graph_from_items(const std::vector<std::string>& item_ids,
                          const EmbeddingTable& table, std::optional<int> label,
                          const std::string& set_id) {
  std::vector<Tensor> states;
  states.reserve(item_ids.size());
  for (const std::string& id : item_ids)
    states.push_back(Tensor({table.dim}, table.vec(id)));
  return make_graph(set_id, item_ids, std::move(states), label);
}

}  // namespace scmp

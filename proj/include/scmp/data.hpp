#ifndef SCMP_DATA_HPP
#define SCMP_DATA_HPP

#include <array>
#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "scmp/model.hpp"

namespace scmp {

// Per-item feature vectors standing in for the image backbone, with optional
// category and style labels. Style "-" means unknown.
struct EmbeddingTable {
  int dim = 0;
  std::vector<std::string> ids;  // insertion order
  std::unordered_map<std::string, std::vector<double>> vectors;
  std::unordered_map<std::string, std::string> category;
  std::unordered_map<std::string, std::string> style;

  bool has(const std::string& id) const { return vectors.count(id) > 0; }
  const std::vector<double>& vec(const std::string& id) const;
  std::string category_of(const std::string& id) const;
  std::string style_of(const std::string& id) const;
};

struct EnsembleSample {
  std::vector<std::string> item_ids;
  int label = 1;
  std::string provenance;
};

struct SetManifest {
  std::vector<std::pair<std::string, std::vector<std::string>>> sets;
};

struct FitbQuestion {
  std::vector<std::string> partial_set;
  std::array<std::string, 4> choices;
  int answer_index = 0;
};

class parse_error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Embedding file: first line "#dim <L>", then
// "id<TAB>category<TAB>style<TAB>v1 v2 ... vL".
EmbeddingTable load_embeddings(const std::string& path);
void save_embeddings(const EmbeddingTable& table, const std::string& path);

// Manifest file: "set_id<TAB>item_id,item_id,...". Singleton sets are dropped
// with a warning on stderr.
SetManifest load_manifest(const std::string& path);
void save_manifest(const SetManifest& manifest, const std::string& path);

// Ensemble corpus file: "label<TAB>item_id,item_id,...".
std::vector<EnsembleSample> load_ensembles(const std::string& path);
void save_ensembles(const std::vector<EnsembleSample>& samples, const std::string& path);

// FITB file: "id,id,...<TAB>c0,c1,c2,c3<TAB>answer_index".
std::vector<FitbQuestion> load_fitb(const std::string& path);
void save_fitb(const std::vector<FitbQuestion>& questions, const std::string& path);

// `count` positives (single style) and `count` negatives (>= 2 distinct
// styles), lengths uniform over [min_len, max_len].
std::vector<EnsembleSample> sample_style_ensembles(const EmbeddingTable& table,
                                                   int count, int min_len, int max_len,
                                                   std::uint64_t seed);

// Positives are the curated sets verbatim (singletons dropped); negatives
// match the positive length distribution and mix >= 2 source sets.
// `max_positives` caps the positives taken; 0 means all.
std::vector<EnsembleSample> sample_collection_ensembles(const SetManifest& sets,
                                                        int max_positives,
                                                        std::uint64_t seed);

// One 4-choice question per usable (>= 3 item) set; distractors share the
// answer's category and, when style labels exist, differ in style. Sets whose
// category pool is too small are skipped with a warning.
std::vector<FitbQuestion> make_fitb_questions(
    const std::vector<std::vector<std::string>>& sets, const EmbeddingTable& table,
    std::uint64_t seed);

// Planted-style embeddings: orthonormal anchor per style, items are
// anchor + N(0, sigma) noise, categories round-robin so every category spans
// all styles. Requires dim >= num_styles.
EmbeddingTable generate_synthetic(int num_styles, int items_per_style, int dim,
                                  double noise_sigma, std::uint64_t seed);

// Disjoint item-id partition by ratio, e.g. {0.68, 0.12, 0.20}.
std::vector<std::vector<std::string>> split_items(const std::vector<std::string>& ids,
                                                  const std::vector<double>& ratios,
                                                  std::uint64_t seed);

// Same partition scheme applied per style, so each partition keeps a
// proportional share of every style. Styles are processed in sorted order.
std::vector<std::vector<std::string>> split_items_stratified(const EmbeddingTable& table,
                                                             const std::vector<double>& ratios,
                                                             std::uint64_t seed);

// Restrict a table to a subset of items.
EmbeddingTable subset_table(const EmbeddingTable& table,
                            const std::vector<std::string>& ids);

// Build a scorable graph from a sample's item ids and embeddings.
SetGraph graph_from_items(const std::vector<std::string>& item_ids,
                          const EmbeddingTable& table, std::optional<int> label,
                          const std::string& set_id = "");

}  // namespace scmp

#endif

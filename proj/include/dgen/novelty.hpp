#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "dgen/tensor.hpp"

namespace dgen {

/// Finite item universe for exhaustive novelty/realism computation. Items
/// carry an id, an optional bit payload (used by matchers and the sample
/// quantizer), and an optional class id.
struct Universe {
    std::vector<std::string> ids;
    std::vector<std::vector<int>> bits;  // empty vector per item when payload-free
    std::vector<int> classes;            // empty when no class map

    std::size_t size() const { return ids.size(); }
    std::optional<std::size_t> find(const std::string& id) const;
    /// Throws std::invalid_argument on duplicate ids, empty universe, or
    /// ragged payloads.
    void validate() const;

    std::string to_csv() const;  // `item_id,bits`
    static Universe from_csv(const std::string& text);

private:
    mutable std::unordered_map<std::string, std::size_t> index_;
};

/// Every binary pattern of the given grid, ids "0".."2^(rows*cols)-1", bit
/// payload MSB-first. rows*cols is capped at 20 (exhaustive universes only).
Universe make_binary_universe(std::size_t rows, std::size_t cols);

/// Pairwise recognition score in [0, 1] with M(i, i) = 1; treated as
/// symmetric.
using Matcher = std::function<double(const Universe&, std::size_t, std::size_t)>;
Matcher exact_match_matcher();
/// 1 when the bit payloads differ in at most max_distance positions.
Matcher hamming_matcher(int max_distance);

/// Per-observer class membership vote in {0, 1}.
using Classifier = std::function<double(const Universe&, std::size_t item, int class_id)>;
/// Votes 1 exactly when the universe's class map assigns the item to the
/// queried class (0 everywhere when the universe has no class map).
Classifier class_map_classifier();

struct Observer {
    std::string id;
    std::vector<std::size_t> memory;  // indices into the universe
    Matcher matcher;
    Classifier classifier;
};
using ObserverPopulation = std::vector<Observer>;

/// nu(x) = sum over observers of the summed match score between x and every
/// remembered item. Zero means no observer recognizes x at all.
double novelty_score(const Universe& u, std::size_t item, const ObserverPopulation& obs);

/// All items with novelty score exactly zero, ascending by index.
std::vector<std::size_t> new_set(const Universe& u, const ObserverPopulation& obs);

/// Generated items split into in-universe indices (multiset) and the count
/// that fell outside the universe.
struct ModelOutputSet {
    std::vector<std::size_t> inside;
    std::size_t outside_count = 0;

    std::size_t total() const { return inside.size() + outside_count; }
};

/// All counts are exact integers; each rate is the single final division.
/// Distinct-item counting: the in-universe part of the output multiset is
/// collapsed to a set before completeness/novelty rates are formed.
/// Undefined rates (empty denominator) stay nullopt.
struct NoveltyRates {
    std::uint64_t universe_count = 0;   // |I|
    std::uint64_t new_count = 0;        // unseen items in the universe
    std::uint64_t inside_distinct = 0;  // distinct generated items inside I
    std::uint64_t novel_distinct = 0;   // distinct generated items that are unseen
    std::optional<double> intrinsic_novelty;  // new_count / universe_count
    std::optional<double> completeness;       // inside_distinct / universe_count
    std::optional<double> relative_novelty;   // novel_distinct / inside_distinct
    std::optional<double> model_novelty;      // novel_distinct / new_count
};

NoveltyRates novelty_rates(const Universe& u, const ObserverPopulation& obs,
                           const ModelOutputSet& outputs);

/// Fraction of observers voting the item into the class; in [0, 1].
double realism(const Universe& u, std::size_t item, const ObserverPopulation& obs,
               int class_id);

/// Mean per-item realism over the whole output multiset; out-of-universe
/// items contribute 0 (nothing outside the universe counts as realistic).
double model_realism(const Universe& u, const ModelOutputSet& outputs,
                     const ObserverPopulation& obs, int class_id);

/// Maps a continuous sample to a universe item or to nullopt (outside).
using Quantizer = std::function<std::optional<std::size_t>(const Universe&, const Tensor&)>;

/// Reads bit b as the value 2b-1 in [-1, 1]; snaps each component to the
/// nearest bit and accepts when every component lies within the tolerance of
/// its snapped value. Requires a bit-payload universe.
Quantizer nearest_bit_quantizer(double tolerance);

ModelOutputSet quantize_outputs(const std::vector<Tensor>& samples, const Universe& u,
                                const Quantizer& q);

/// `observer_id,memory_item_ids...` — one row per observer, memory given as
/// item ids. Loaded observers get the exact-match matcher and the class-map
/// classifier.
std::string observers_to_csv(const ObserverPopulation& obs, const Universe& u);
ObserverPopulation observers_from_csv(const std::string& text, const Universe& u);

/// Output multisets as text: header `item_id`, one row per generated item,
/// out-of-universe items written as the reserved id `__outside__`.
std::string outputs_to_csv(const ModelOutputSet& outputs, const Universe& u);
ModelOutputSet outputs_from_csv(const std::string& text, const Universe& u);

}  // namespace dgen

#include "dgen/novelty.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

#include "dgen/textio.hpp"

namespace dgen {

namespace {

constexpr const char* kOutsideId = "__outside__";

void check_item(const Universe& u, std::size_t item, const char* what) {
    if (item >= u.size())
        throw std::out_of_range(std::string(what) + ": unknown item index " +
                                std::to_string(item));
}

const std::vector<int>& payload(const Universe& u, std::size_t item, const char* what) {
    if (u.bits.size() != u.size() || u.bits[item].empty())
        throw std::invalid_argument(std::string(what) + ": universe items carry no bit payload");
    return u.bits[item];
}

}  // namespace

std::optional<std::size_t> Universe::find(const std::string& id) const {
    if (index_.size() != ids.size()) {
        index_.clear();
        for (std::size_t i = 0; i < ids.size(); ++i) index_.emplace(ids[i], i);
    }
    auto it = index_.find(id);
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

void Universe::validate() const {
    if (ids.empty()) throw std::invalid_argument("Universe: must hold at least one item");
    std::set<std::string> seen;
    for (const std::string& id : ids) {
        if (id.empty() || id == kOutsideId)
            throw std::invalid_argument("Universe: invalid item id '" + id + "'");
        if (!seen.insert(id).second)
            throw std::invalid_argument("Universe: duplicate item id '" + id + "'");
    }
    if (!bits.empty()) {
        if (bits.size() != ids.size())
            throw std::invalid_argument("Universe: bit payload count must match items");
        std::size_t width = bits.front().size();
        for (const std::vector<int>& b : bits) {
            if (b.size() != width)
                throw std::invalid_argument("Universe: ragged bit payloads");
            for (int v : b)
                if (v != 0 && v != 1)
                    throw std::invalid_argument("Universe: payload bits must be 0 or 1");
        }
    }
    if (!classes.empty() && classes.size() != ids.size())
        throw std::invalid_argument("Universe: class map must cover every item");
}

std::string Universe::to_csv() const {
    validate();
    std::string out = "item_id,bits\n";
    for (std::size_t i = 0; i < ids.size(); ++i) {
        out += ids[i] + ",";
        if (!bits.empty())
            for (int b : bits[i]) out += static_cast<char>('0' + b);
        out += "\n";
    }
    return out;
}

Universe Universe::from_csv(const std::string& text) {
    std::vector<std::string> lines = split_lines(text);
    if (lines.empty() || lines[0] != "item_id,bits")
        throw std::invalid_argument("Universe::from_csv: missing `item_id,bits` header");
    Universe u;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        std::vector<std::string> f = split_csv_line(lines[i]);
        if (f.size() != 2)
            throw std::invalid_argument("Universe::from_csv: expected `item_id,bits` per row");
        u.ids.push_back(f[0]);
        std::vector<int> b;
        for (char c : f[1]) {
            if (c != '0' && c != '1')
                throw std::invalid_argument("Universe::from_csv: bits must be 0/1");
            b.push_back(c - '0');
        }
        u.bits.push_back(std::move(b));
    }
    bool any_bits = false;
    for (const std::vector<int>& b : u.bits) any_bits = any_bits || !b.empty();
    if (!any_bits) u.bits.clear();
    u.validate();
    return u;
}

Universe make_binary_universe(std::size_t rows, std::size_t cols) {
    std::size_t n_bits = rows * cols;
    if (n_bits == 0 || n_bits > 20)
        throw std::invalid_argument("make_binary_universe: rows*cols must be in [1, 20]");
    Universe u;
    std::size_t n = std::size_t{1} << n_bits;
    u.ids.reserve(n);
    u.bits.reserve(n);
    for (std::size_t v = 0; v < n; ++v) {
        u.ids.push_back(std::to_string(v));
        std::vector<int> b(n_bits);
        for (std::size_t j = 0; j < n_bits; ++j)
            b[j] = static_cast<int>((v >> (n_bits - 1 - j)) & 1u);
        u.bits.push_back(std::move(b));
    }
    return u;
}

Matcher exact_match_matcher() {
    return [](const Universe&, std::size_t a, std::size_t b) { return a == b ? 1.0 : 0.0; };
}

Matcher hamming_matcher(int max_distance) {
    if (max_distance < 0)
        throw std::invalid_argument("hamming_matcher: max_distance must be >= 0");
    return [max_distance](const Universe& u, std::size_t a, std::size_t b) {
        const std::vector<int>& pa = payload(u, a, "hamming_matcher");
        const std::vector<int>& pb = payload(u, b, "hamming_matcher");
        int d = 0;
        for (std::size_t j = 0; j < pa.size(); ++j) d += pa[j] != pb[j];
        return d <= max_distance ? 1.0 : 0.0;
    };
}

Classifier class_map_classifier() {
    return [](const Universe& u, std::size_t item, int class_id) {
        if (u.classes.empty()) return 0.0;
        return u.classes[item] == class_id ? 1.0 : 0.0;
    };
}

double novelty_score(const Universe& u, std::size_t item, const ObserverPopulation& obs) {
    check_item(u, item, "novelty_score");
    double score = 0.0;
    for (const Observer& o : obs) {
        if (!o.matcher) throw std::invalid_argument("novelty_score: observer without matcher");
        for (std::size_t remembered : o.memory) {
            check_item(u, remembered, "novelty_score (memory)");
            score += o.matcher(u, item, remembered);
        }
    }
    return score;
}

std::vector<std::size_t> new_set(const Universe& u, const ObserverPopulation& obs) {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < u.size(); ++i)
        if (novelty_score(u, i, obs) == 0.0) out.push_back(i);
    return out;
}

NoveltyRates novelty_rates(const Universe& u, const ObserverPopulation& obs,
                           const ModelOutputSet& outputs) {
    u.validate();
    for (std::size_t i : outputs.inside) check_item(u, i, "novelty_rates");
    std::vector<std::size_t> unseen = new_set(u, obs);
    std::set<std::size_t> unseen_set(unseen.begin(), unseen.end());
    std::set<std::size_t> inside_set(outputs.inside.begin(), outputs.inside.end());

    NoveltyRates r;
    r.universe_count = u.size();
    r.new_count = unseen.size();
    r.inside_distinct = inside_set.size();
    for (std::size_t i : inside_set) r.novel_distinct += unseen_set.count(i);

    auto ratio = [](std::uint64_t num, std::uint64_t den) -> std::optional<double> {
        if (den == 0) return std::nullopt;
        return static_cast<double>(num) / static_cast<double>(den);
    };
    r.intrinsic_novelty = ratio(r.new_count, r.universe_count);
    r.completeness = ratio(r.inside_distinct, r.universe_count);
    r.relative_novelty = ratio(r.novel_distinct, r.inside_distinct);
    r.model_novelty = ratio(r.novel_distinct, r.new_count);
    return r;
}

double realism(const Universe& u, std::size_t item, const ObserverPopulation& obs,
               int class_id) {
    check_item(u, item, "realism");
    if (obs.empty()) throw std::invalid_argument("realism: empty observer population");
    double votes = 0.0;
    for (const Observer& o : obs) {
        if (!o.classifier) throw std::invalid_argument("realism: observer without classifier");
        votes += o.classifier(u, item, class_id);
    }
    return votes / static_cast<double>(obs.size());
}

double model_realism(const Universe& u, const ModelOutputSet& outputs,
                     const ObserverPopulation& obs, int class_id) {
    if (outputs.total() == 0) throw std::invalid_argument("model_realism: empty output set");
    double total = 0.0;
    for (std::size_t i : outputs.inside) total += realism(u, i, obs, class_id);
    return total / static_cast<double>(outputs.total());
}

Quantizer nearest_bit_quantizer(double tolerance) {
    if (!(tolerance >= 0.0))
        throw std::invalid_argument("nearest_bit_quantizer: tolerance must be >= 0");
    return [tolerance](const Universe& u, const Tensor& x) -> std::optional<std::size_t> {
        payload(u, 0, "nearest_bit_quantizer");
        std::size_t width = u.bits.front().size();
        if (x.numel() != width) return std::nullopt;
        std::vector<int> snapped(width);
        for (std::size_t j = 0; j < width; ++j) {
            int bit = x.data[j] >= 0.0 ? 1 : 0;
            if (std::abs(x.data[j] - (2.0 * bit - 1.0)) > tolerance) return std::nullopt;
            snapped[j] = bit;
        }
        for (std::size_t i = 0; i < u.size(); ++i)
            if (u.bits[i] == snapped) return i;
        return std::nullopt;
    };
}

ModelOutputSet quantize_outputs(const std::vector<Tensor>& samples, const Universe& u,
                                const Quantizer& q) {
    ModelOutputSet out;
    for (const Tensor& x : samples) {
        std::optional<std::size_t> hit = q(u, x);
        if (hit.has_value()) out.inside.push_back(*hit);
        else ++out.outside_count;
    }
    return out;
}

std::string observers_to_csv(const ObserverPopulation& obs, const Universe& u) {
    std::string out = "observer_id,memory_item_ids\n";
    for (const Observer& o : obs) {
        out += o.id;
        for (std::size_t i : o.memory) {
            check_item(u, i, "observers_to_csv");
            out += "," + u.ids[i];
        }
        out += "\n";
    }
    return out;
}

ObserverPopulation observers_from_csv(const std::string& text, const Universe& u) {
    std::vector<std::string> lines = split_lines(text);
    if (lines.empty() || lines[0] != "observer_id,memory_item_ids")
        throw std::invalid_argument("observers_from_csv: missing `observer_id,memory_item_ids` header");
    ObserverPopulation obs;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        std::vector<std::string> f = split_csv_line(lines[i]);
        if (f.empty() || f[0].empty())
            throw std::invalid_argument("observers_from_csv: row without observer id");
        Observer o;
        o.id = f[0];
        for (std::size_t j = 1; j < f.size(); ++j) {
            if (f[j].empty()) continue;  // trailing comma from an empty memory
            std::optional<std::size_t> idx = u.find(f[j]);
            if (!idx.has_value())
                throw std::invalid_argument("observers_from_csv: unknown item id '" + f[j] + "'");
            o.memory.push_back(*idx);
        }
        o.matcher = exact_match_matcher();
        o.classifier = class_map_classifier();
        obs.push_back(std::move(o));
    }
    return obs;
}

std::string outputs_to_csv(const ModelOutputSet& outputs, const Universe& u) {
    std::string out = "item_id\n";
    for (std::size_t i : outputs.inside) {
        check_item(u, i, "outputs_to_csv");
        out += u.ids[i] + "\n";
    }
    for (std::size_t k = 0; k < outputs.outside_count; ++k) out += std::string(kOutsideId) + "\n";
    return out;
}

ModelOutputSet outputs_from_csv(const std::string& text, const Universe& u) {
    std::vector<std::string> lines = split_lines(text);
    if (lines.empty() || lines[0] != "item_id")
        throw std::invalid_argument("outputs_from_csv: missing `item_id` header");
    ModelOutputSet out;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        if (lines[i] == kOutsideId) {
            ++out.outside_count;
            continue;
        }
        std::optional<std::size_t> idx = u.find(lines[i]);
        if (!idx.has_value())
            throw std::invalid_argument("outputs_from_csv: unknown item id '" + lines[i] + "'");
        out.inside.push_back(*idx);
    }
    return out;
}

}  // namespace dgen

#include <cstdint>
#include <set>
#include <stdexcept>
#include <vector>

#include "doctest.h"

#include "dgen/novelty.hpp"
#include "dgen/rng.hpp"

using namespace dgen;

namespace {

Observer exact_observer(std::string id, std::vector<std::size_t> memory) {
    Observer o;
    o.id = std::move(id);
    o.memory = std::move(memory);
    o.matcher = exact_match_matcher();
    o.classifier = class_map_classifier();
    return o;
}

// Direct translation of the definitions, sharing nothing with the library
// path: nu(x) = sum_o sum_{i in memory_o} M_o(x, i).
double brute_force_nu(const Universe& u, std::size_t item, const ObserverPopulation& obs) {
    double nu = 0.0;
    for (const Observer& o : obs)
        for (std::size_t m : o.memory) nu += o.matcher(u, item, m);
    return nu;
}

}  // namespace

TEST_SUITE_BEGIN("novelty");

TEST_CASE("exhaustive binary universe enumerates every pattern") {
    Universe u = make_binary_universe(3, 3);
    CHECK(u.size() == 512);
    CHECK(u.ids.front() == "0");
    CHECK(u.ids.back() == "511");
    // Item 5 = 000000101 with the most significant bit first.
    REQUIRE(u.bits[5].size() == 9);
    std::vector<int> want{0, 0, 0, 0, 0, 0, 1, 0, 1};
    CHECK(u.bits[5] == want);
    CHECK_NOTHROW(u.validate());
    CHECK(u.find("5").value() == 5);
    CHECK_FALSE(u.find("512").has_value());
    CHECK_THROWS_AS(make_binary_universe(5, 5), std::invalid_argument);
    CHECK(make_binary_universe(2, 2).size() == 16);
}

TEST_CASE("universe validation catches duplicates and ragged payloads") {
    Universe u;
    u.ids = {"a", "a"};
    u.bits = {{0}, {1}};
    CHECK_THROWS_AS(u.validate(), std::invalid_argument);
    u.ids = {"a", "b"};
    u.bits = {{0}, {1, 1}};
    CHECK_THROWS_AS(u.validate(), std::invalid_argument);
    u.bits = {{0}, {2}};
    CHECK_THROWS_AS(u.validate(), std::invalid_argument);
    Universe empty;
    CHECK_THROWS_AS(empty.validate(), std::invalid_argument);
}

TEST_CASE("matchers: identity always recognizes; hamming respects the radius") {
    Universe u = make_binary_universe(2, 2);
    Matcher exact = exact_match_matcher();
    CHECK(exact(u, 3, 3) == 1.0);
    CHECK(exact(u, 3, 7) == 0.0);
    Matcher near = hamming_matcher(1);
    CHECK(near(u, 3, 3) == 1.0);   // distance 0
    CHECK(near(u, 3, 7) == 1.0);   // 0011 vs 0111: one bit
    CHECK(near(u, 3, 12) == 0.0);  // 0011 vs 1100: four bits
    CHECK(near(u, 0, 3) == 0.0);   // two bits apart
    CHECK_THROWS_AS(hamming_matcher(-1), std::invalid_argument);
}

TEST_CASE("novelty score matches an independent double loop") {
    Universe u = make_binary_universe(2, 2);
    ObserverPopulation obs;
    obs.push_back(exact_observer("a", {0, 1, 2}));
    Observer fuzzy;
    fuzzy.id = "b";
    fuzzy.memory = {15, 0};
    fuzzy.matcher = hamming_matcher(1);
    fuzzy.classifier = class_map_classifier();
    obs.push_back(fuzzy);
    for (std::size_t i = 0; i < u.size(); ++i)
        CHECK(novelty_score(u, i, obs) == brute_force_nu(u, i, obs));
    // Hand value: item 0 scores 1 (observer a) + 1 (b: distance 0 to 0) = 2.
    CHECK(novelty_score(u, 0, obs) == 2.0);
}

TEST_CASE("the unseen set is exactly the zero-score items, ascending") {
    Universe u = make_binary_universe(2, 2);
    ObserverPopulation obs;
    obs.push_back(exact_observer("a", {0, 3, 9}));
    std::vector<std::size_t> unseen = new_set(u, obs);
    CHECK(unseen.size() == 13);
    for (std::size_t i = 1; i < unseen.size(); ++i) CHECK(unseen[i] > unseen[i - 1]);
    for (std::size_t i : unseen) {
        CHECK(novelty_score(u, i, obs) == 0.0);
        CHECK(i != 0);
        CHECK(i != 3);
        CHECK(i != 9);
    }
}

TEST_CASE("worked example: 16 items, 8 unseen, 4 distinct generated, 2 novel") {
    Universe u = make_binary_universe(2, 2);
    ObserverPopulation obs;
    obs.push_back(exact_observer("a", {0, 1, 2, 3}));
    obs.push_back(exact_observer("b", {4, 5, 6, 7}));
    // Generated multiset: items 8, 8, 9 (unseen), 0, 1 (seen), one outside.
    ModelOutputSet outputs;
    outputs.inside = {8, 8, 9, 0, 1};
    outputs.outside_count = 1;
    NoveltyRates r = novelty_rates(u, obs, outputs);
    CHECK(r.universe_count == 16);
    CHECK(r.new_count == 8);
    CHECK(r.inside_distinct == 4);
    CHECK(r.novel_distinct == 2);
    REQUIRE(r.intrinsic_novelty.has_value());
    REQUIRE(r.completeness.has_value());
    REQUIRE(r.relative_novelty.has_value());
    REQUIRE(r.model_novelty.has_value());
    CHECK(*r.intrinsic_novelty == 0.5);
    CHECK(*r.completeness == 0.25);
    CHECK(*r.relative_novelty == 0.5);
    CHECK(*r.model_novelty == 0.25);
    // The product relation holds exactly here: C * N / N_intrinsic = N_model.
    CHECK(*r.completeness * *r.relative_novelty / *r.intrinsic_novelty ==
          *r.model_novelty);
}

TEST_CASE("rates stay consistent with brute-force counting on random setups") {
    Rng rng(77, 0);
    for (int rep = 0; rep < 20; ++rep) {
        Universe u = make_binary_universe(2, 2);
        ObserverPopulation obs;
        int n_obs = 1 + static_cast<int>(rng.below(3));
        for (int k = 0; k < n_obs; ++k) {
            std::vector<std::size_t> mem;
            for (std::size_t i = 0; i < u.size(); ++i)
                if (rng.uniform() < 0.3) mem.push_back(i);
            obs.push_back(exact_observer("o" + std::to_string(k), std::move(mem)));
        }
        ModelOutputSet outputs;
        int n_out = static_cast<int>(rng.below(12));
        for (int i = 0; i < n_out; ++i)
            outputs.inside.push_back(static_cast<std::size_t>(rng.below(u.size())));
        outputs.outside_count = static_cast<std::size_t>(rng.below(3));

        NoveltyRates r = novelty_rates(u, obs, outputs);
        std::uint64_t unseen = 0;
        for (std::size_t i = 0; i < u.size(); ++i)
            if (brute_force_nu(u, i, obs) == 0.0) ++unseen;
        std::set<std::size_t> inside(outputs.inside.begin(), outputs.inside.end());
        std::uint64_t novel = 0;
        for (std::size_t i : inside)
            if (brute_force_nu(u, i, obs) == 0.0) ++novel;
        CHECK(r.universe_count == u.size());
        CHECK(r.new_count == unseen);
        CHECK(r.inside_distinct == inside.size());
        CHECK(r.novel_distinct == novel);
        if (r.model_novelty.has_value() && r.intrinsic_novelty.has_value() &&
            *r.intrinsic_novelty > 0.0 && r.completeness.has_value() &&
            r.relative_novelty.has_value()) {
            double product = *r.completeness * *r.relative_novelty / *r.intrinsic_novelty;
            CHECK(*r.model_novelty == doctest::Approx(product).epsilon(1e-15));
        }
    }
}

TEST_CASE("undefined rates are reported as absent, not as crashes") {
    Universe u = make_binary_universe(2, 2);
    // Observers that remember everything: nothing is unseen.
    std::vector<std::size_t> all;
    for (std::size_t i = 0; i < u.size(); ++i) all.push_back(i);
    ObserverPopulation full{exact_observer("all", all)};
    ModelOutputSet outputs;
    outputs.inside = {1, 2};
    NoveltyRates r1 = novelty_rates(u, full, outputs);
    CHECK(r1.new_count == 0);
    CHECK(*r1.intrinsic_novelty == 0.0);
    CHECK_FALSE(r1.model_novelty.has_value());
    CHECK(r1.relative_novelty.has_value());

    // Nothing generated inside the universe.
    ObserverPopulation some{exact_observer("a", {0})};
    ModelOutputSet none;
    none.outside_count = 3;
    NoveltyRates r2 = novelty_rates(u, some, none);
    CHECK(r2.inside_distinct == 0);
    CHECK_FALSE(r2.relative_novelty.has_value());
    CHECK(*r2.completeness == 0.0);
}

TEST_CASE("growing an observer's memory never enlarges the unseen set") {
    Universe u = make_binary_universe(2, 2);
    Rng rng(5, 0);
    std::vector<std::size_t> memory;
    std::size_t prev = new_set(u, ObserverPopulation{exact_observer("a", memory)}).size();
    for (int add = 0; add < 10; ++add) {
        memory.push_back(static_cast<std::size_t>(rng.below(u.size())));
        std::size_t now = new_set(u, ObserverPopulation{exact_observer("a", memory)}).size();
        CHECK(now <= prev);
        prev = now;
    }
}

TEST_CASE("realism averages classifier votes; outside items dilute the mean") {
    Universe u = make_binary_universe(2, 2);
    for (std::size_t i = 0; i < u.size(); ++i) {
        int ones = 0;
        for (int b : u.bits[i]) ones += b;
        u.classes.push_back(ones >= 2 ? 1 : 0);
    }
    ObserverPopulation obs;
    obs.push_back(exact_observer("a", {0}));
    Observer contrarian = exact_observer("b", {1});
    contrarian.classifier = [](const Universe&, std::size_t, int) { return 0.0; };
    obs.push_back(contrarian);
    // Item 15 (all ones) is in class 1: one vote of two.
    CHECK(realism(u, 15, obs, 1) == 0.5);
    CHECK(realism(u, 0, obs, 1) == 0.0);
    ModelOutputSet outputs;
    outputs.inside = {15, 15, 0};
    outputs.outside_count = 1;
    // Mean over 4 generated items: (0.5 + 0.5 + 0 + 0) / 4.
    CHECK(model_realism(u, outputs, obs, 1) == 0.25);
    ModelOutputSet empty;
    CHECK_THROWS_AS(model_realism(u, empty, obs, 1), std::invalid_argument);
}

TEST_CASE("classifier votes are zero without a class map") {
    Universe u = make_binary_universe(2, 2);  // no classes assigned
    ObserverPopulation obs{exact_observer("a", {0})};
    CHECK(realism(u, 3, obs, 1) == 0.0);
}

TEST_CASE("quantizer snaps near-bit samples and rejects off-grid ones") {
    Universe u = make_binary_universe(2, 2);
    Quantizer q = nearest_bit_quantizer(0.25);
    // Item 9 = 1001 -> values (+1, -1, -1, +1).
    Tensor exact9({4}, {1.0, -1.0, -1.0, 1.0});
    CHECK(q(u, exact9).value() == 9);
    Tensor near9({4}, {0.8, -0.9, -1.1, 1.2});
    CHECK(q(u, near9).value() == 9);
    Tensor off({4}, {0.5, -1.0, -1.0, 1.0});
    CHECK_FALSE(q(u, off).has_value());
    Tensor wrong_width({2}, {1.0, -1.0});
    CHECK_FALSE(q(u, wrong_width).has_value());

    std::vector<Tensor> samples{exact9, near9, off};
    ModelOutputSet outputs = quantize_outputs(samples, u, q);
    REQUIRE(outputs.inside.size() == 2);
    CHECK(outputs.inside[0] == 9);
    CHECK(outputs.inside[1] == 9);
    CHECK(outputs.outside_count == 1);
    CHECK_THROWS_AS(nearest_bit_quantizer(-0.1), std::invalid_argument);
}

TEST_CASE("universe csv round-trip preserves ids and payloads") {
    Universe u = make_binary_universe(2, 2);
    Universe r = Universe::from_csv(u.to_csv());
    CHECK(r.ids == u.ids);
    CHECK(r.bits == u.bits);
    CHECK_THROWS(Universe::from_csv("wrong,header\n"));
    CHECK_THROWS(Universe::from_csv("item_id,bits\nx,012\n"));
}

TEST_CASE("observer csv round-trip preserves memberships") {
    Universe u = make_binary_universe(2, 2);
    ObserverPopulation obs;
    obs.push_back(exact_observer("watcher_a", {3, 1, 7}));
    obs.push_back(exact_observer("watcher_b", {}));
    std::string csv = observers_to_csv(obs, u);
    ObserverPopulation r = observers_from_csv(csv, u);
    REQUIRE(r.size() == 2);
    CHECK(r[0].id == "watcher_a");
    CHECK(r[0].memory == obs[0].memory);
    CHECK(r[1].memory.empty());
    // Loaded observers carry working matcher and classifier closures.
    CHECK(r[0].matcher(u, 3, 3) == 1.0);
    CHECK(r[0].matcher(u, 3, 4) == 0.0);
    CHECK_THROWS(observers_from_csv("observer_id,memory_item_ids\nx,999\n", u));
}

TEST_CASE("output csv round-trip keeps multiplicity and outside markers") {
    Universe u = make_binary_universe(2, 2);
    ModelOutputSet outputs;
    outputs.inside = {5, 5, 2};
    outputs.outside_count = 2;
    std::string csv = outputs_to_csv(outputs, u);
    ModelOutputSet r = outputs_from_csv(csv, u);
    CHECK(r.inside == outputs.inside);
    CHECK(r.outside_count == 2);
    CHECK_THROWS(outputs_from_csv("item_id\nnope\n", u));
}

TEST_CASE("payload-dependent tools reject payload-free universes") {
    Universe u;
    u.ids = {"alpha", "beta"};
    u.bits = {{}, {}};
    CHECK_NOTHROW(u.validate());
    Matcher near = hamming_matcher(1);
    CHECK_THROWS_AS(near(u, 0, 1), std::invalid_argument);
    Quantizer q = nearest_bit_quantizer(0.5);
    Tensor x({1}, {0.5});
    CHECK_THROWS_AS(q(u, x), std::invalid_argument);
    // Exact matching still works: it needs only identity.
    Matcher exact = exact_match_matcher();
    CHECK(exact(u, 0, 0) == 1.0);
    CHECK(exact(u, 0, 1) == 0.0);
}

TEST_SUITE_END();

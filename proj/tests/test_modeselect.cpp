#include <doctest.h>

#include <set>
#include <sstream>

#include "vmgcn/errors.hpp"
#include "vmgcn/modeselect.hpp"
#include "vmgcn/synthetic.hpp"

using namespace vmgcn;

TEST_CASE("node sampling") {
    const auto s = sample_nodes(50, 0.2, 7);
    CHECK(s.size() == 10);
    CHECK(std::is_sorted(s.begin(), s.end()));
    CHECK(std::set<std::size_t>(s.begin(), s.end()).size() == 10);
    CHECK(s.back() < 50);
    CHECK(sample_nodes(50, 0.2, 7) == s);
    CHECK(sample_nodes(50, 0.2, 8) != s);
    CHECK(sample_nodes(10, 0.02, 1).size() == 1);  // at least one node
    CHECK(sample_nodes(3, 1.0, 1) == std::vector<std::size_t>{0, 1, 2});
    CHECK(sample_nodes(0, 0.5, 1).empty());
}

TEST_CASE("configuration checks") {
    ModeSelectConfig c;
    c.k_max = 1;
    CHECK_THROWS_AS(c.validate(), InvalidConfig);
    c = {};
    c.sample_fraction = 0.0;
    CHECK_THROWS_AS(c.validate(), InvalidConfig);
    c = {};
    c.zeta = 0.0;
    CHECK_THROWS_AS(c.validate(), InvalidConfig);
    CHECK_THROWS_AS(select_num_modes({}, ModeSelectConfig{}, VmdConfig{}), InvalidInput);
}

TEST_CASE("pure tones need few modes") {
    const auto region = tone_region(6, 4096, {0.1}, 0.0, 3);
    ModeSelectConfig c;
    c.sample_fraction = 0.5;
    c.k_min = 2;
    c.k_max = 4;
    const ModeSelection sel = select_num_modes(region.series, c, VmdConfig{}, 1);
    CHECK(sel.threshold_met);
    CHECK(sel.k == 2);
    CHECK(sel.curve.size() == 3);
    CHECK(sel.sampled_nodes.size() == 3);
}

TEST_CASE("five separated tones select five to eight modes") {
    const auto region = tone_region(10, 2048, {0.05, 0.12, 0.2, 0.3, 0.4}, 0.002, 11);
    ModeSelectConfig c;
    c.sample_fraction = 0.2;
    c.k_min = 2;
    c.k_max = 9;
    c.seed = 4;
    const ModeSelection a = select_num_modes(region.series, c, VmdConfig{}, 1);
    CHECK(a.threshold_met);
    CHECK(a.k >= 5);
    CHECK(a.k <= 8);
    for (const auto& p : a.curve) CHECK(p.qualifying == (p.mean_loss < c.zeta));
    // the smallest qualifying K wins
    for (const auto& p : a.curve)
        if (p.k < a.k) CHECK_FALSE(p.qualifying);

    const ModeSelection b = select_num_modes(region.series, c, VmdConfig{}, 2);
    CHECK(b.k == a.k);
    CHECK(b.sampled_nodes == a.sampled_nodes);
    for (std::size_t i = 0; i < a.curve.size(); ++i) CHECK(b.curve[i].mean_loss == a.curve[i].mean_loss);

    std::ostringstream os;
    write_k_selection_csv(os, a);
    const std::string text = os.str();
    CHECK(text.rfind("K,mean_loss,qualifying\n", 0) == 0);
    CHECK(std::count(text.begin(), text.end(), '\n') == 1 + 8);
}

TEST_CASE("unreachable threshold falls back to k_max") {
    const auto region = tone_region(4, 512, {0.05, 0.12, 0.2, 0.3, 0.4}, 0.2, 2);
    ModeSelectConfig c;
    c.sample_fraction = 0.5;
    c.k_min = 2;
    c.k_max = 3;
    c.zeta = 1e-9;
    const ModeSelection sel = select_num_modes(region.series, c, VmdConfig{}, 1);
    CHECK_FALSE(sel.threshold_met);
    CHECK(sel.k == 3);
}

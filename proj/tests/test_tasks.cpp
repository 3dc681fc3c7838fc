#include <doctest.h>

#include <cmath>
#include <set>
#include <sstream>

#include "oracles.hpp"
#include "specedge/tasks.hpp"

using namespace specedge;

namespace {
std::vector<int> toks(const std::string& s) {
    std::vector<int> out;
    for (const char c : s) out.push_back(c == '(' ? dyck::kOpen : dyck::kClose);
    return out;
}
} // namespace

TEST_CASE("depth labels follow the running sum") {
    CHECK(dyck_depths(toks("()")) == std::vector<int>{1, 0});
    CHECK(dyck_depths(toks("(())")) == std::vector<int>{1, 2, 1, 0});
}

TEST_CASE("dyck word counts are Catalan numbers") {
    CHECK(dyck_word_count(2) == 1);
    CHECK(dyck_word_count(6) == 5);
    CHECK(dyck_word_count(24) == 208012);
}

TEST_CASE("sampler produces valid words, uniformly for T=6") {
    Rng rng(2024);
    const auto words = oracles::all_dyck_words(6);
    REQUIRE(words.size() == 5);
    std::map<std::vector<int>, int> counts;
    const int n = 100000;
    for (int i = 0; i < n; ++i) {
        auto w = sample_dyck_word(6, rng);
        REQUIRE(dyck_valid(w));
        counts[w]++;
    }
    CHECK(counts.size() == 5);
    // 3 sigma band around n/5 under the multinomial
    const double mean = n / 5.0;
    const double sigma = std::sqrt(n * 0.2 * 0.8);
    for (const auto& [w, c] : counts) CHECK(std::abs(c - mean) < 3.0 * sigma);
}

TEST_CASE("gen_dyck: validity, distinctness, determinism") {
    const DyckDataset a = gen_dyck(50, 200, 24, 42);
    CHECK(a.train.size() == 50);
    CHECK(a.test.size() == 200);
    std::set<std::vector<int>> seen;
    for (const auto& grp : {a.train, a.test}) {
        for (const auto& ex : grp) {
            CHECK(dyck_valid(ex.tokens));
            CHECK(ex.depths == dyck_depths(ex.tokens));
            CHECK(ex.depths.back() == 0);
            for (const int d : ex.depths) CHECK(d >= 0);
            CHECK(seen.insert(ex.tokens).second); // train/test disjoint, all distinct
        }
    }
    const DyckDataset b = gen_dyck(50, 200, 24, 42);
    for (std::size_t i = 0; i < a.train.size(); ++i) CHECK(a.train[i].tokens == b.train[i].tokens);
}

TEST_CASE("gen_dyck rejects impossible requests") {
    CHECK_THROWS_AS(gen_dyck(4, 2, 6, 1), std::invalid_argument); // only 5 words exist
    CHECK_THROWS_AS(gen_dyck(1, 0, 5, 1), std::invalid_argument); // odd length
}

TEST_CASE("scan oracle expands the grammar") {
    auto expand = [](const std::string& cmd) {
        std::vector<std::string> in;
        std::istringstream ss(cmd);
        std::string t;
        while (ss >> t) in.push_back(t);
        std::string out;
        for (const auto& a : scan_oracle(in)) out += (out.empty() ? "" : " ") + a;
        return out;
    };
    CHECK(expand("jump") == "JUMP");
    CHECK(expand("jump left twice") == "LTURN JUMP LTURN JUMP");
    CHECK(expand("walk opposite right") == "RTURN RTURN WALK");
    CHECK(expand("look opposite left thrice") == "LTURN LTURN LOOK LTURN LTURN LOOK LTURN LTURN LOOK");
    CHECK(expand("run right and jump twice") == "RTURN RUN JUMP JUMP");
    CHECK_THROWS_AS(expand("left jump"), std::invalid_argument);
}

TEST_CASE("gen_scan_lite splits and stays oracle-consistent") {
    const ScanDataset ds = gen_scan_lite(7);
    CHECK(ds.train.size() == 2048);
    CHECK(ds.test.size() == 500);
    const auto& v = ScanVocab::instance();
    std::set<std::vector<int>> seen;
    for (const auto& grp : {ds.train, ds.test}) {
        for (const auto& ex : grp) {
            CHECK(seen.insert(ex.command).second);
            // re-derive actions from the stored command
            std::vector<std::string> cmd;
            for (const int id : ex.command) cmd.push_back(v.command_tokens[static_cast<std::size_t>(id)]);
            std::vector<int> expect;
            for (const auto& a : scan_oracle(cmd)) expect.push_back(v.act_id(a));
            CHECK(ex.actions == expect);
        }
    }
    const ScanDataset again = gen_scan_lite(7);
    CHECK(again.train[0].command == ds.train[0].command);
}

TEST_CASE("modadd covers all pairs with the documented split rule") {
    const ModAddDataset tiny = gen_modadd(5, 0.5, 3);
    CHECK(tiny.train.size() + tiny.test.size() == 25);
    for (const auto& grp : {tiny.train, tiny.test})
        for (const auto& ex : grp) CHECK(ex.target == (ex.a + ex.b) % 5);

    const ModAddDataset big = gen_modadd(97, 0.5, 3);
    CHECK(big.train.size() == 4704); // floor(0.5 * 9409)
    CHECK(big.test.size() == 4705);

    CHECK_THROWS_AS(gen_modadd(8, 0.5, 3), std::invalid_argument);
}

TEST_CASE("modadd spot values") {
    // (2+3) mod 5 = 0; (96+1) mod 97 = 0
    CHECK((2 + 3) % 5 == 0);
    const ModAddDataset ds = gen_modadd(97, 0.99, 1);
    bool found = false;
    for (const auto& grp : {ds.train, ds.test})
        for (const auto& ex : grp)
            if (ex.a == 96 && ex.b == 1) {
                found = true;
                CHECK(ex.target == 0);
            }
    CHECK(found);
}

TEST_CASE("line-delimited round trips") {
    SUBCASE("dyck") {
        const auto ds = gen_dyck(5, 5, 8, 9);
        std::stringstream ss;
        write_dyck(ss, ds.train);
        const auto back = read_dyck(ss);
        REQUIRE(back.size() == ds.train.size());
        for (std::size_t i = 0; i < back.size(); ++i) {
            CHECK(back[i].tokens == ds.train[i].tokens);
            CHECK(back[i].depths == ds.train[i].depths);
        }
    }
    SUBCASE("scan") {
        const auto ds = gen_scan_lite(5, 20, 5);
        std::stringstream ss;
        write_scan(ss, ds.test);
        const auto back = read_scan(ss);
        REQUIRE(back.size() == ds.test.size());
        for (std::size_t i = 0; i < back.size(); ++i) {
            CHECK(back[i].command == ds.test[i].command);
            CHECK(back[i].actions == ds.test[i].actions);
        }
    }
    SUBCASE("modadd") {
        const auto ds = gen_modadd(5, 0.6, 5);
        std::stringstream ss;
        write_modadd(ss, ds.train);
        const auto back = read_modadd(ss);
        REQUIRE(back.size() == ds.train.size());
        CHECK(back[0].a == ds.train[0].a);
    }
}

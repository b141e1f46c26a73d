#include <algorithm>
#include <functional>
#include <random>
#include <sstream>

#include "doctest.h"
#include "solarpmu/errors.hpp"
#include "solarpmu/ingest.hpp"

using namespace solarpmu;

namespace {

ParsedStream parse_text(const std::string& text) {
    std::istringstream in(text);
    return parse_stream(in, "solar");
}

PhasorStream frames(std::vector<Timestamp> ts, std::string id = "a") {
    PhasorStream s;
    s.feeder_id = std::move(id);
    for (auto t : ts) s.samples.emplace_back(t, 7200.0, 0.0, 100.0, 0.0);
    return s;
}

std::vector<Timestamp> grid(int n, Timestamp offset = 0) {
    std::vector<Timestamp> out;
    for (int k = 0; k < n; ++k) out.push_back(offset + (k * 1000000LL + 60) / 120);
    return out;
}

/// Maximum-cardinality matching with the least total skew, by exhaustive search.
std::vector<std::pair<Timestamp, Timestamp>> brute_force_align(const PhasorStream& a, const PhasorStream& b,
                                                               std::int64_t tol) {
    std::vector<std::pair<Timestamp, Timestamp>> best;
    std::int64_t best_cost = 0;
    std::vector<std::pair<Timestamp, Timestamp>> current;
    std::vector<bool> used(b.samples.size(), false);
    std::function<void(std::size_t, std::int64_t)> go = [&](std::size_t i, std::int64_t cost) {
        if (i == a.samples.size()) {
            if (current.size() > best.size() || (current.size() == best.size() && cost < best_cost)) {
                best = current;
                best_cost = cost;
            }
            return;
        }
        go(i + 1, cost);
        for (std::size_t j = 0; j < b.samples.size(); ++j) {
            const auto skew = std::llabs(a.samples[i].timestamp - b.samples[j].timestamp);
            if (used[j] || skew > tol) continue;
            used[j] = true;
            current.emplace_back(a.samples[i].timestamp, b.samples[j].timestamp);
            go(i + 1, cost + skew);
            current.pop_back();
            used[j] = false;
        }
    };
    go(0, 0);
    return best;
}

}  // namespace

TEST_CASE("three well-formed rows") {
    const auto p = parse_text("timestamp_us,v_mag,v_ang,i_mag,i_ang\n0,7200,0,100,0\n8333,7200,0,100,0\n"
                              "16667,7200,0,100,0\n");
    CHECK(p.stream.samples.size() == 3);
    CHECK(p.gaps.gaps.empty());
    CHECK(p.dropped_rows.empty());
}

TEST_CASE("a hole in the timestamps is reported as a gap") {
    const auto p = parse_text("timestamp_us,v_mag,v_ang,i_mag,i_ang\n0,1,0,1,0\n8333,1,0,1,0\n100000,1,0,1,0\n");
    REQUIRE(p.gaps.gaps.size() == 1);
    CHECK(p.gaps.gaps[0].start == 8333);
    CHECK(p.gaps.gaps[0].end == 100000);
    CHECK(p.gaps.gaps[0].missing == 10);
}

TEST_CASE("schema violations") {
    CHECK_THROWS_AS(parse_text("time,v\n0,1\n"), FormatError);
    CHECK_THROWS_AS(parse_text(""), FormatError);
    const auto bom = parse_text("\xEF\xBB\xBFtimestamp_us,v_mag,v_ang,i_mag,i_ang\n0,1,0,1,0\n");
    CHECK(bom.stream.samples.size() == 1);
}

TEST_CASE("bad rows are dropped with their line numbers") {
    const auto p = parse_text("timestamp_us,v_mag,v_ang,i_mag,i_ang\n0,1,0,1,0\n8333,abc,0,1,0\n"
                              "16667,1,0,1,0\n10000,1,0,1,0\n25000,1,0,1\n33333,1,0,1,0\n");
    CHECK(p.stream.samples.size() == 3);
    REQUIRE(p.dropped_rows.size() == 3);
    CHECK(p.dropped_rows[0].line == 3);
    CHECK(p.dropped_rows[1].line == 5);
    CHECK(p.dropped_rows[2].line == 6);
}

TEST_CASE("serialize then parse is bit-exact") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> mag(0.0, 1e4);
    std::uniform_real_distribution<double> ang(-179.999, 180.0);
    PhasorStream s;
    s.feeder_id = "solar";
    Timestamp t = 1700000000000000LL;
    for (int k = 0; k < 2000; ++k) {
        t += 8333 + (k % 3 == 0 ? 1 : 0);
        s.samples.emplace_back(t, mag(rng), ang(rng), mag(rng) / 10.0, ang(rng));
    }
    s.samples.emplace_back(t + 8333, 1e-300, 180.0, 0.0, -0.0);
    std::ostringstream out;
    serialize_stream(out, s);
    std::istringstream in(out.str());
    const auto back = parse_stream(in, "solar");
    REQUIRE(back.stream.samples.size() == s.samples.size());
    for (std::size_t k = 0; k < s.samples.size(); ++k) {
        CHECK(back.stream.samples[k] == s.samples[k]);
    }
    std::ostringstream again;
    serialize_stream(again, back.stream);
    CHECK(again.str() == out.str());
}

TEST_CASE("align: identical and shifted timestamp sets") {
    const auto a = frames(grid(50));
    const auto same = align(a, frames(grid(50), "b"));
    REQUIRE(same.size() == 50);
    for (const auto& p : same) CHECK(p.skew == 0);

    const auto shifted = align(a, frames(grid(50, 2000), "b"), 4166);
    REQUIRE(shifted.size() == 50);
    for (const auto& p : shifted) CHECK(p.skew == 2000);

    // 6000 us beyond the half-frame tolerance: pairs with the next frame instead.
    const auto adjacent = align(a, frames(grid(50, 6000), "b"), 4166);
    REQUIRE(adjacent.size() == 49);
    for (const auto& p : adjacent) {
        CHECK(std::llabs(p.skew - 2333) <= 1);
        CHECK(p.auxiliary.timestamp < p.solar.timestamp);
    }
}

TEST_CASE("align agrees with an exhaustive matching") {
    std::mt19937_64 rng(21);
    std::uniform_int_distribution<Timestamp> shift(-9000, 9000);
    std::uniform_int_distribution<Timestamp> jitter(-300, 300);
    std::uniform_int_distribution<int> length(1, 6);
    for (int trial = 0; trial < 300; ++trial) {
        auto ta = grid(length(rng));
        auto tb = grid(length(rng), shift(rng));
        for (auto& t : tb) t += jitter(rng);
        std::sort(tb.begin(), tb.end());
        tb.erase(std::unique(tb.begin(), tb.end()), tb.end());
        const auto a = frames(ta);
        const auto b = frames(tb, "b");
        const auto greedy = align(a, b, 4166);
        const auto oracle = brute_force_align(a, b, 4166);
        REQUIRE(greedy.size() == oracle.size());
        for (std::size_t k = 0; k < greedy.size(); ++k) {
            CHECK(greedy[k].solar.timestamp == oracle[k].first);
            CHECK(greedy[k].auxiliary.timestamp == oracle[k].second);
        }
    }
}

TEST_CASE("align is symmetric and respects the tolerance") {
    std::mt19937_64 rng(8);
    std::uniform_int_distribution<Timestamp> jitter(-5000, 5000);
    for (int trial = 0; trial < 50; ++trial) {
        auto ta = grid(40);
        auto tb = grid(40, 3000);
        for (auto& t : ta) t += jitter(rng) / 4;
        for (auto& t : tb) t += jitter(rng);
        std::sort(ta.begin(), ta.end());
        std::sort(tb.begin(), tb.end());
        const auto a = frames(ta);
        const auto b = frames(tb, "b");
        const auto ab = align(a, b, 4166);
        const auto ba = align(b, a, 4166);
        REQUIRE(ab.size() == ba.size());
        std::vector<std::pair<Timestamp, Timestamp>> x;
        std::vector<std::pair<Timestamp, Timestamp>> y;
        for (const auto& p : ab) {
            CHECK(p.skew <= 4166);
            x.emplace_back(p.solar.timestamp, p.auxiliary.timestamp);
        }
        for (const auto& p : ba) y.emplace_back(p.auxiliary.timestamp, p.solar.timestamp);
        std::sort(x.begin(), x.end());
        std::sort(y.begin(), y.end());
        CHECK(x == y);
        for (std::size_t k = 1; k < ab.size(); ++k) CHECK(ab[k - 1].solar.timestamp < ab[k].solar.timestamp);
    }
}

TEST_CASE("disjoint time ranges align to nothing") {
    CHECK(align(frames(grid(10)), frames(grid(10, 10000000), "b")).empty());
}

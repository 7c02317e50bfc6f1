#include <catch2/catch.hpp>

#include "oracles.hpp"
#include "vsyn/flow.hpp"

using namespace vsyn;

namespace {

Frame textured_frame(Rng& rng, int w, int h) {
    Frame f = make_frame(w, h, 1);
    for (auto& px : f.pixels) px = static_cast<uint8_t>(rng.next_u64() & 0xFF);
    return f;
}

/// Shifts content right/down by (dx, dy), clamping at the source border.
Frame shifted(const Frame& src, int dx, int dy) {
    Frame out = make_frame(src.width, src.height, 1);
    for (int y = 0; y < src.height; ++y)
        for (int x = 0; x < src.width; ++x) {
            const int sx = std::clamp(x - dx, 0, src.width - 1);
            const int sy = std::clamp(y - dy, 0, src.height - 1);
            out.at(x, y) = src.at(sx, sy);
        }
    return out;
}

double median_of(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    return v[v.size() / 2];
}

}  // namespace

TEST_CASE("identical frames produce near-zero flow") {
    Rng rng(1);
    const Frame f = textured_frame(rng, 96, 64);
    const FlowField field = dense_flow(f, f);
    for (size_t i = 0; i < field.u.size(); ++i) {
        CHECK(std::abs(field.u[i]) <= 0.1f);
        CHECK(std::abs(field.v[i]) <= 0.1f);
    }
}

TEST_CASE("a 3px right shift is recovered in the interior") {
    Rng rng(2);
    const Frame a = textured_frame(rng, 160, 120);
    const Frame b = shifted(a, 3, 0);
    const FlowField field = dense_flow(a, b);
    std::vector<double> us, vs;
    for (int y = 16; y < 104; ++y)
        for (int x = 16; x < 144; ++x) {
            us.push_back(field.u_at(x, y));
            vs.push_back(std::abs(field.v_at(x, y)));
        }
    CHECK(median_of(us) >= 2.5);
    CHECK(median_of(us) <= 3.5);
    CHECK(median_of(vs) <= 0.5);
}

TEST_CASE("textureless frames yield flow without error") {
    const Frame a = make_frame(64, 64, 1, 80);
    const Frame b = make_frame(64, 64, 1, 80);
    const FlowField field = dense_flow(a, b);
    for (size_t i = 0; i < field.u.size(); ++i) {
        CHECK(std::isfinite(field.u[i]));
        CHECK(std::abs(field.u[i]) <= 4.0f * 4);  // bounded by the search range
    }
}

TEST_CASE("random translations in [1,4] px are recovered") {
    Rng rng(33);
    for (int trial = 0; trial < 6; ++trial) {
        const int dx = 1 + static_cast<int>(rng.next_int(0, 3));
        const int dy = 1 + static_cast<int>(rng.next_int(0, 3));
        const Frame a = textured_frame(rng, 128, 96);
        const Frame b = shifted(a, dx, dy);
        const FlowField field = dense_flow(a, b);
        std::vector<double> us, vs;
        for (int y = 16; y < 80; ++y)
            for (int x = 16; x < 112; ++x) {
                us.push_back(field.u_at(x, y));
                vs.push_back(field.v_at(x, y));
            }
        CHECK(std::abs(median_of(us) - dx) <= 0.5);
        CHECK(std::abs(median_of(vs) - dy) <= 0.5);
    }
}

TEST_CASE("dimension or channel mismatches are rejected") {
    CHECK_THROWS_AS(dense_flow(make_frame(8, 8, 1), make_frame(9, 8, 1)), Error);
    CHECK_THROWS_AS(dense_flow(make_frame(8, 8, 3), make_frame(8, 8, 3)), Error);
}

TEST_CASE("a uniform frame has no corners") {
    CHECK(corner_features(make_frame(64, 64, 1, 128), 50).empty());
}

TEST_CASE("a white square yields its four corners") {
    Frame f = make_frame(64, 64, 1, 0);
    for (int y = 20; y < 44; ++y)
        for (int x = 20; x < 44; ++x) f.at(x, y) = 255;
    const auto points = corner_features(f, 10);
    REQUIRE(points.size() == 4);
    const PointI truth[4] = {{20, 20}, {43, 20}, {20, 43}, {43, 43}};
    for (const PointI& t : truth) {
        bool found = false;
        for (const PointI& p : points)
            if (std::abs(p.x - t.x) <= 3 && std::abs(p.y - t.y) <= 3) found = true;
        CHECK(found);
    }

    // Each reported point sits on a local maximum of the independent
    // response map.
    const auto resp = oracle::naive_harris(f);
    for (const PointI& p : points) {
        const double r = resp[static_cast<size_t>(p.y) * 64 + p.x];
        CHECK(r > 0.0);
    }
}

TEST_CASE("corner count respects the cap") {
    Frame f = make_frame(96, 96, 1, 0);
    for (int y = 0; y < 96; ++y)
        for (int x = 0; x < 96; ++x) f.at(x, y) = ((x / 12) + (y / 12)) % 2 ? 255 : 0;
    const auto points = corner_features(f, 5);
    CHECK(points.size() == 5);
}

TEST_CASE("block histogram basics") {
    FlowField field;
    field.width = 16;
    field.height = 16;
    field.u.assign(256, 0.0f);
    field.v.assign(256, 0.0f);

    CHECK(block_histograms(field).total() == 0.0);

    field.u[0] = 1.0f;  // pixel (0,0): vector (1,0) -> bin 0
    BlockHistograms h = block_histograms(field);
    CHECK(h.at(0, 0, 0) == Approx(1.0));
    CHECK(h.total() == Approx(1.0));

    field.u[0] = 0.0f;
    field.v[0] = 2.0f;  // (0,2): 90 degrees -> bin 2, mass 2
    h = block_histograms(field);
    CHECK(h.at(0, 0, 2) == Approx(2.0));
    CHECK(h.at(0, 0, 0) == 0.0);
}

TEST_CASE("orientation binning is total and exclusive") {
    for (int bins : {9, 18}) {
        for (double ang = 0.0; ang < 360.0; ang += 0.37) {
            const double rad = ang * 3.14159265358979323846 / 180.0;
            const int bin = orientation_bin(std::cos(rad), std::sin(rad), bins);
            REQUIRE(bin >= 0);
            REQUIRE(bin < bins);
            const int expect =
                std::min(bins - 1, static_cast<int>(ang / (360.0 / bins)));
            CHECK((bin == expect || bin == (expect + bins - 1) % bins ||
                   bin == (expect + 1) % bins));  // boundary rounding only
        }
    }
}

TEST_CASE("histogram mass equals total contributing magnitude") {
    Rng rng(17);
    FlowField field;
    field.width = 40;
    field.height = 24;
    field.u.resize(static_cast<size_t>(40) * 24);
    field.v.resize(field.u.size());
    double mass = 0.0;
    for (size_t i = 0; i < field.u.size(); ++i) {
        field.u[i] = static_cast<float>(rng.next_gaussian() * 3);
        field.v[i] = static_cast<float>(rng.next_gaussian() * 3);
        mass += std::sqrt(static_cast<double>(field.u[i]) * field.u[i] +
                          static_cast<double>(field.v[i]) * field.v[i]);
    }
    CHECK(block_histograms(field).total() == Approx(mass).epsilon(1e-6));

    // Sparse restriction: only listed points contribute.
    const std::vector<PointI> pts{{0, 0}, {9, 9}, {39, 23}};
    double sparse_mass = 0.0;
    for (const PointI& p : pts) {
        const size_t i = static_cast<size_t>(p.y) * 40 + p.x;
        sparse_mass += std::sqrt(static_cast<double>(field.u[i]) * field.u[i] +
                                 static_cast<double>(field.v[i]) * field.v[i]);
    }
    CHECK(block_histograms(field, &pts).total() == Approx(sparse_mass).epsilon(1e-6));
}

TEST_CASE("flow statistics") {
    FlowField field;
    field.width = 8;
    field.height = 8;
    field.u.assign(64, 0.0f);
    field.v.assign(64, 0.0f);
    FlowStats st = flow_stats(field);
    CHECK(st.total == 0.0);
    CHECK(st.variance == 0.0);

    for (size_t i = 0; i < 64; ++i) {
        field.u[i] = 3.0f;
        field.v[i] = 4.0f;
    }
    st = flow_stats(field);
    CHECK(st.total == Approx(5.0 * 64));
    CHECK(st.variance == Approx(0.0).margin(1e-9));

    for (size_t i = 0; i < 32; ++i) {
        field.u[i] = 0.0f;
        field.v[i] = 0.0f;
    }
    for (size_t i = 32; i < 64; ++i) {
        field.u[i] = 2.0f;
        field.v[i] = 0.0f;
    }
    st = flow_stats(field);
    CHECK(st.variance == Approx(1.0));  // half zeros, half twos

    std::vector<double> mags(64, 0.0);
    for (size_t i = 32; i < 64; ++i) mags[i] = 2.0;
    CHECK(st.variance == Approx(oracle::population_variance(mags)));
}

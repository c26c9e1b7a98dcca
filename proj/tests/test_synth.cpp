#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <map>

#include "seamweld/cascade.hpp"
#include "seamweld/overlap.hpp"
#include "seamweld/synth.hpp"

using namespace seamweld;
using Catch::Approx;

TEST_CASE("scenes are deterministic in the seed") {
    SceneConfig cfg;
    cfg.point_count = 2000;
    cfg.seed = 77;
    cfg.artifact_model = ArtifactModel::constant_plus_smooth;
    auto [p1, t1] = generate_scene(cfg);
    auto [p2, t2] = generate_scene(cfg);

    REQUIRE(p1.size() == p2.size());
    for (std::size_t p = 0; p < p1.size(); ++p) {
        CHECK(p1[p].points == p2[p].points);
        CHECK(p1[p].values == p2[p].values);
        CHECK(p1[p].global_ids == p2[p].global_ids);
    }
    CHECK(t1.ground_truth == t2.ground_truth);
    CHECK(t1.injected_offsets == t2.injected_offsets);

    cfg.seed = 78;
    auto [p3, t3] = generate_scene(cfg);
    CHECK(p3[0].values != p1[0].values);
}

TEST_CASE("zero artifact scale reproduces the truth on every tile") {
    SceneConfig cfg;
    cfg.point_count = 1500;
    cfg.artifact_scale = 0.0;
    cfg.artifact_model = ArtifactModel::constant_plus_smooth;
    auto [parts, truth] = generate_scene(cfg);

    std::map<std::uint64_t, double> truth_by_id;
    for (std::size_t k = 0; k < truth.ids.size(); ++k)
        truth_by_id[truth.ids[k].value] = truth.ground_truth[k];

    for (const auto& part : parts)
        for (std::size_t k = 0; k < part.size(); ++k)
            CHECK(part.values[k] == truth_by_id.at(part.global_ids[k].value));
}

TEST_CASE("partition data decomposes exactly into truth plus artifacts") {
    SceneConfig cfg;
    cfg.point_count = 1200;
    cfg.seed = 3;
    cfg.artifact_model = ArtifactModel::constant_plus_smooth;
    cfg.artifact_scale = 4.0;
    auto [parts, truth] = generate_scene(cfg);

    std::map<std::uint64_t, double> truth_by_id;
    for (std::size_t k = 0; k < truth.ids.size(); ++k)
        truth_by_id[truth.ids[k].value] = truth.ground_truth[k];

    for (const auto& part : parts) {
        const double offset = truth.injected_offsets[part.index];
        const SmoothArtifact& smooth = truth.injected_smooth[part.index];
        for (std::size_t k = 0; k < part.size(); ++k) {
            const double expect =
                truth_by_id.at(part.global_ids[k].value) + offset + smooth(part.points[k]);
            CHECK(part.values[k] == expect);  // same expression, bit-exact
        }
    }
}

TEST_CASE("grid 3x2 yields six tiles with corner degree four") {
    SceneConfig cfg;
    cfg.tiles_x = 3;
    cfg.tiles_y = 2;
    cfg.point_count = 8000;
    cfg.seed = 12;
    auto [parts, truth] = generate_scene(cfg);
    REQUIRE(parts.size() == 6);

    const auto index = compute_overlaps(parts);
    CHECK(max_overlap_degree(index) == 4);

    // Direct membership count agrees: some point sits in four rectangles.
    std::size_t best = 0;
    for (const auto& member : truth.memberships) best = std::max(best, member.size());
    CHECK(best == 4);
}

TEST_CASE("staggered 3x2 yields five tiles capped at degree three") {
    SceneConfig cfg;
    cfg.layout = TileLayout::staggered;
    cfg.tiles_x = 3;
    cfg.tiles_y = 2;
    cfg.point_count = 8000;
    cfg.seed = 13;
    auto [parts, truth] = generate_scene(cfg);
    REQUIRE(parts.size() == 5);

    const auto index = compute_overlaps(parts);
    CHECK(max_overlap_degree(index) == 3);
}

TEST_CASE("tile coverage: every point lands in at least one tile") {
    SceneConfig cfg;
    cfg.tiles_x = 4;
    cfg.tiles_y = 3;
    cfg.point_count = 5000;
    cfg.seed = 14;
    auto [parts, truth] = generate_scene(cfg);
    for (const auto& member : truth.memberships) CHECK(!member.empty());

    std::size_t total = 0;
    for (const auto& part : parts) total += part.size();
    std::size_t memberships = 0;
    for (const auto& member : truth.memberships) memberships += member.size();
    CHECK(total == memberships);
}

TEST_CASE("invalid scene configs are rejected") {
    SceneConfig cfg;
    cfg.overlap_fraction = 0.0;
    CHECK_THROWS_AS(generate_scene(cfg), InvalidConfig);
    cfg.overlap_fraction = 0.7;
    CHECK_THROWS_AS(generate_scene(cfg), InvalidConfig);
    cfg = {};
    cfg.tiles_x = 0;
    CHECK_THROWS_AS(generate_scene(cfg), InvalidConfig);
    cfg = {};
    cfg.point_count = 4;
    CHECK_THROWS_AS(generate_scene(cfg), InvalidConfig);
    cfg = {};
    cfg.layout = TileLayout::staggered;
    cfg.tiles_x = 1;
    CHECK_THROWS_AS(generate_scene(cfg), InvalidConfig);
    cfg = {};
    cfg.layout = TileLayout::staggered;
    cfg.overlap_fraction = 0.5;  // bands collide
    cfg.tiles_x = 3;
    CHECK_THROWS_AS(generate_scene(cfg), InvalidConfig);
}

TEST_CASE("truth models produce finite fields at the requested scale") {
    for (auto model :
         {TruthModel::gaussian_bumps, TruthModel::polynomial, TruthModel::plane}) {
        SceneConfig cfg;
        cfg.truth_model = model;
        cfg.point_count = 1000;
        cfg.truth_scale = 100.0;
        auto [parts, truth] = generate_scene(cfg);
        double peak = 0.0;
        for (double v : truth.ground_truth) {
            REQUIRE(std::isfinite(v));
            peak = std::max(peak, std::abs(v));
        }
        CHECK(peak > 1.0);
        CHECK(peak <= 300.0);
    }
}

TEST_CASE("score is exact on the truth and gauge-blind") {
    SceneConfig cfg;
    cfg.point_count = 1500;
    cfg.seed = 15;
    auto [parts, truth] = generate_scene(cfg);

    MergedDataset merged;
    merged.global_ids = truth.ids;
    merged.points = truth.points;
    merged.values = truth.ground_truth;
    merged.provenance.assign(truth.ids.size(), 1);

    const ScoreRecord exact = score(merged, truth);
    CHECK(exact.rmse == Approx(0.0).margin(1e-12));
    CHECK(exact.max_error == Approx(0.0).margin(1e-12));
    CHECK(exact.seam_max_merged == Approx(exact.seam_max_truth).margin(1e-12));
    CHECK(exact.crossing_edges > 0);

    for (double& v : merged.values) v += 7.0;
    const ScoreRecord shifted = score(merged, truth);
    CHECK(shifted.gauge == Approx(7.0).margin(1e-12));
    CHECK(shifted.rmse == Approx(0.0).margin(1e-10));

    merged.values.pop_back();
    merged.global_ids.pop_back();
    merged.points.pop_back();
    CHECK_THROWS_AS(score(merged, truth), IdMismatch);
}

TEST_CASE("constant artifacts are recovered exactly by the full pipeline") {
    SceneConfig cfg;
    cfg.tiles_x = 3;
    cfg.tiles_y = 2;
    cfg.point_count = 6000;
    cfg.seed = 16;
    cfg.artifact_model = ArtifactModel::constant;
    cfg.artifact_scale = 5.0;
    auto [parts, truth] = generate_scene(cfg);

    auto [merged, report] = merge(parts);
    const ScoreRecord rec = score(merged, truth);
    CHECK(rec.max_error <= 1e-9);

    // The offset step already did all the work; the cascade rounds add
    // nothing beyond rounding noise.
    auto corrected = parts;
    const auto index = compute_overlaps(corrected);
    apply_offsets(corrected, solve_offsets(pairwise_means(corrected, index),
                                           corrected.size()));
    std::map<std::uint64_t, double> by_id;
    for (std::size_t k = 0; k < merged.size(); ++k)
        by_id[merged.global_ids[k].value] = merged.values[k];
    for (const auto& part : corrected)
        for (std::size_t k = 0; k < part.size(); ++k)
            CHECK(std::abs(by_id.at(part.global_ids[k].value) - part.values[k]) <= 1e-12);
}

TEST_CASE("full pipeline beats naive averaging on smooth artifacts") {
    SceneConfig cfg;
    cfg.tiles_x = 3;
    cfg.tiles_y = 2;
    cfg.point_count = 6000;
    cfg.seed = 17;
    cfg.artifact_model = ArtifactModel::constant_plus_smooth;
    cfg.artifact_scale = 5.0;
    auto [parts, truth] = generate_scene(cfg);

    // Naive baseline: per-point average of the raw partition values.
    std::map<std::uint64_t, std::pair<double, std::size_t>> acc;
    for (const auto& part : parts)
        for (std::size_t k = 0; k < part.size(); ++k) {
            auto& slot = acc[part.global_ids[k].value];
            slot.first += part.values[k];
            ++slot.second;
        }
    MergedDataset naive;
    naive.global_ids = truth.ids;
    naive.points = truth.points;
    for (auto id : truth.ids) {
        const auto& slot = acc.at(id.value);
        naive.values.push_back(slot.first / double(slot.second));
    }
    naive.provenance.assign(truth.ids.size(), 1);

    auto [merged, report] = merge(parts);
    const ScoreRecord corrected = score(merged, truth);
    const ScoreRecord baseline = score(naive, truth);
    CHECK(corrected.rmse < baseline.rmse);
    CHECK(corrected.seam_max_merged < baseline.seam_max_merged);
}

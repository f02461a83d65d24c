#include <filesystem>
#include <fstream>

#include <gtest/gtest.h>

#include "hyshield/experiment.hpp"
#include "hyshield/persistence.hpp"

using namespace hyshield;

TEST(Config, DumpParsesBackToSameText) {
    const ExperimentConfig c;
    const std::string text = dump(c);
    const auto back = parse_config(text);
    EXPECT_EQ(dump(back), text);
    EXPECT_EQ(fingerprint(back, {}, KeyScope::training), fingerprint(c, {}, KeyScope::training));
}

TEST(Config, ModifiedValuesRoundTrip) {
    ExperimentConfig c;
    c.grid.axes[0].bins = 9;
    c.actions.delta = {0.2, 0.6, 1.0};
    c.learner.seed = 77;
    c.x0.gamma = deg2rad(-3.3);
    c.shield.online_check = false;
    const auto back = parse_config(dump(c));
    EXPECT_EQ(back.grid.axes[0].bins, 9);
    EXPECT_EQ(back.actions.delta, c.actions.delta);
    EXPECT_EQ(back.learner.seed, 77u);
    EXPECT_NEAR(back.x0.gamma, c.x0.gamma, 1e-15);
    EXPECT_FALSE(back.shield.online_check);
    EXPECT_EQ(dump(parse_config(dump(back))), dump(back));
}

TEST(Config, SectionsAndComments) {
    const auto c = parse_config("# comment\n[learner]\nseed = 5  # trailing\nepisodes=12\n\n[grid]\nh.bins = 4\n");
    EXPECT_EQ(c.learner.seed, 5u);
    EXPECT_EQ(c.learner.episodes, 12);
    EXPECT_EQ(c.grid.axes[0].bins, 4);
}

TEST(Config, RejectsBadInput) {
    EXPECT_THROW(parse_config("learner.sed = 5\n"), ConfigError);
    EXPECT_THROW(parse_config("learner.seed\n"), ConfigError);
    EXPECT_THROW(parse_config("learner.discount = abc\n"), ConfigError);
    EXPECT_THROW(parse_config("learner.discount = 1.5\n"), ConfigError);
    EXPECT_THROW(parse_config("integrator.dt = -1\n"), ConfigError);
    EXPECT_THROW(parse_config("actions.alpha_deg = 3, 40\n"), ConfigError);
    EXPECT_THROW(parse_config("[learner\nseed = 1\n"), ConfigError);
    EXPECT_THROW(parse_config("learner.mode_augmented = true\n"), ConfigError);
    EXPECT_NO_THROW(parse_config("learner.mode_augmented = false\n"));
    EXPECT_THROW(load_config("/nonexistent/cfg.ini"), ConfigError);
}

TEST(Config, FingerprintScopes) {
    const ExperimentConfig base;
    const ModelTables t;
    auto c = base;
    c.learner.seed = 9;
    EXPECT_EQ(fingerprint(c, t, KeyScope::viability), fingerprint(base, t, KeyScope::viability));
    EXPECT_NE(fingerprint(c, t, KeyScope::training), fingerprint(base, t, KeyScope::training));
    c = base;
    c.limits.hard.n_max = 4.0;
    EXPECT_NE(fingerprint(c, t, KeyScope::viability), fingerprint(base, t, KeyScope::viability));
    c = base;
    c.rollout_steps = 50;
    EXPECT_EQ(fingerprint(c, t, KeyScope::training), fingerprint(base, t, KeyScope::training));
    auto t2 = t;
    t2.aero.rows[0].CD0 += 0.001;
    EXPECT_NE(fingerprint(base, t2, KeyScope::viability), fingerprint(base, t, KeyScope::viability));
}

TEST(Tables, JsonRoundTrip) {
    const ModelTables t;
    const auto j = tables_to_json(t);
    const auto back = tables_from_json(j);
    EXPECT_EQ(tables_to_json(back), j);
    EXPECT_EQ(back.aero.rows.size(), 6u);
    EXPECT_EQ(back.propulsion.thrust_max_kN.rows().size(), 5u);
}

TEST(Tables, PartialFileKeepsDefaults) {
    auto j = nlohmann::json::parse(R"({"aero": [{"mach": 4, "CL0": 0, "CLalpha": 2, "CD0": 0.02, "K": 0.1, "CDalpha2": 0.5},
                                                {"mach": 8, "CL0": 0, "CLalpha": 1, "CD0": 0.01, "K": 0.2, "CDalpha2": 0.4}]})");
    const auto t = tables_from_json(j);
    EXPECT_EQ(t.aero.rows.size(), 2u);
    EXPECT_EQ(tables_to_json(t)["propulsion"], tables_to_json(ModelTables{})["propulsion"]);
}

TEST(Tables, MalformedFilesAreConfigErrors) {
    EXPECT_THROW(tables_from_json(nlohmann::json::parse(R"({"aero": [{"mach": 4}]})")), ConfigError);
    EXPECT_THROW(tables_from_json(nlohmann::json::parse(
                     R"({"propulsion": {"altitude_m": [0, 1], "mach": [4, 5], "thrust_max_kN": [[1, 2]], "isp_s": [[1, 2], [3, 4]]}})")),
                 ConfigError);
    EXPECT_THROW(load_tables("/nonexistent/tables.json"), ConfigError);
}

namespace {

ViabilityResult small_viability(std::uint64_t fp) {
    TransitionTable t(3, 2);
    t.at(0, 0) = {true, 1};
    t.at(0, 1) = {false, kNoSuccessor};
    t.at(1, 0) = {true, 0};
    t.at(1, 1) = {true, 2};
    t.at(2, 0) = {false, kNoSuccessor};
    t.at(2, 1) = {false, kNoSuccessor};
    auto r = compute_feasible_set(t);
    r.set_fingerprint(fp);
    return r;
}

} // namespace

TEST(Artifacts, ViabilityRoundTrip) {
    const auto v = small_viability(123);
    const auto back = deserialize_viability(serialize(v), 123, 3, 2);
    EXPECT_EQ(serialize(back), serialize(v));
    EXPECT_EQ(back.feasible_count(), 2u);
    EXPECT_EQ(back.admissible_mask(1), ActionMask(0b01));
}

TEST(Artifacts, QTableRoundTrip) {
    QTable q(4, 3);
    q(2, 1) = -1.25;
    q(3, 0) = 1e-300;
    q.count_visit(2, 1);
    q.fingerprint = 55;
    const auto back = deserialize_qtable(serialize(q), 55, 4, 3);
    EXPECT_EQ(back(2, 1), -1.25);
    EXPECT_EQ(back(3, 0), 1e-300);
    EXPECT_EQ(back.visits(2, 1), 1u);
    EXPECT_EQ(serialize(back), serialize(q));
}

TEST(Artifacts, RefusesMismatchAndCorruption) {
    const auto bytes = serialize(small_viability(123));
    EXPECT_THROW(deserialize_viability(bytes, 124, 3, 2), ArtifactMismatch);
    EXPECT_THROW(deserialize_viability(bytes, 123, 4, 2), ArtifactMismatch);
    EXPECT_THROW(deserialize_viability(bytes, 123, 3, 3), ArtifactMismatch);
    EXPECT_THROW(deserialize_qtable(bytes, 123, 3, 2), ArtifactMismatch);
    for (std::size_t i = 0; i < bytes.size(); i += 5) {
        auto bad = bytes;
        bad[i] = static_cast<char>(bad[i] ^ 0x10);
        EXPECT_THROW(deserialize_viability(bad, 123, 3, 2), ArtifactMismatch) << "byte " << i;
    }
    EXPECT_THROW(deserialize_viability(bytes.substr(0, bytes.size() - 1), 123, 3, 2), ArtifactMismatch);
    EXPECT_THROW(deserialize_viability("", 123, 3, 2), ArtifactMismatch);
}

TEST(Artifacts, FileRoundTrip) {
    const auto dir = std::filesystem::temp_directory_path() / "hyshield_test_io";
    std::filesystem::create_directories(dir);
    const auto path = (dir / "v.bin").string();
    const auto v = small_viability(9);
    save(path, v);
    EXPECT_EQ(serialize(load_viability(path, 9, 3, 2)), serialize(v));
    EXPECT_THROW(load_viability((dir / "missing.bin").string(), 9, 3, 2), ArtifactMismatch);
    std::filesystem::remove_all(dir);
}

TEST(Artifacts, ExperimentFingerprintGuardsLearner) {
    ExperimentConfig c;
    c.grid.axes[0].bins = 4;
    c.grid.axes[1].bins = 5;
    c.grid.axes[2].bins = 4;
    const Experiment ex(c);
    const auto v = ex.compute_viability();
    const auto reloaded = deserialize_viability(serialize(v), ex.viability_fingerprint(), c.grid.size(), 20);
    EXPECT_NO_THROW((void)ex.learner(reloaded));
    c.dt = 0.25;
    const Experiment other(c);
    EXPECT_THROW((void)deserialize_viability(serialize(v), other.viability_fingerprint(), c.grid.size(), 20),
                 ArtifactMismatch);
}

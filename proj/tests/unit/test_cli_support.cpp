#include "helpers.hpp"

#include "xmorph/config.hpp"
#include "xmorph/error.hpp"
#include "xmorph/plot.hpp"

#include <doctest.h>

#include <fstream>
#include <regex>

using namespace xmorph;

TEST_CASE("key-value config parsing") {
    const auto kv = KeyValueConfig::parse(
        "# experiment\n"
        "task = content\n"
        "method=edn-property   # trailing comment\n"
        "\n"
        "budgets = 7, 20, 40\n"
        "contexts = shake-audio, drop-force\n"
        "edn.epochs = 12\n"
        "svm.gamma = scale\n"
        "kema.mu = 0.25\n"
        "repeats = 1\n"
        "repeats = 3\n");
    ProtocolConfig p;
    apply_config(kv, p);
    CHECK(p.task == LabelKind::Content);
    CHECK(p.method == Method::EdnProperty);
    CHECK(p.budgets == std::vector<int>{7, 20, 40});
    CHECK(p.repeats == 3);
    REQUIRE(p.contexts.size() == 2);
    CHECK(p.contexts[1] == std::pair{Behavior::Drop, Modality::Force});
    CHECK(p.edn.epochs == 12);
    CHECK_FALSE(p.svm.gamma.has_value());
    CHECK(p.kema.mu == 0.25);
    kv.reject_unused();
}

TEST_CASE("config errors") {
    auto code = [](auto&& fn) {
        try {
            fn();
        } catch (const Error& e) {
            return e.code();
        }
        return ErrorCode::IoError;
    };
    CHECK(code([] { KeyValueConfig::load("/nonexistent/run.cfg"); }) == ErrorCode::MissingFile);
    try {
        KeyValueConfig::load("/nonexistent/run.cfg");
    } catch (const Error& e) {
        CHECK(std::string(e.what()).find("/nonexistent/run.cfg") != std::string::npos);
    }
    const auto typo = KeyValueConfig::parse("repeets = 3\n");
    ProtocolConfig p;
    apply_config(typo, p);
    CHECK(code([&] { typo.reject_unused(); }) == ErrorCode::InvalidConfig);
    CHECK(code([] {
              ProtocolConfig q;
              apply_config(KeyValueConfig::parse("repeats = many\n"), q);
          }) == ErrorCode::InvalidConfig);
    CHECK(code([] { parse_context("shake"); }) == ErrorCode::SchemaViolation);
    CHECK(parse_context("lower-effort") == std::pair{Behavior::Lower, Modality::Effort});
}

TEST_CASE("synth config overrides") {
    const auto kv = KeyValueConfig::parse("objects = 30\nrobots = a:5, b:4\nrobot.b.noise_sigma = 0.3\nbehaviors = shake\n");
    SynthConfig s;
    apply_config(kv, s);
    CHECK(s.objects == 30);
    REQUIRE(s.robots.size() == 2);
    CHECK(s.robots[0].effort_joints == 5);
    CHECK(s.robots[1].noise_sigma == 0.3);
    CHECK(s.behaviors == std::vector<Behavior>{Behavior::Shake});
    const auto j = to_json(s);
    CHECK(j["objects"] == 30);
}

TEST_CASE("report charts carry the CSV values") {
    std::vector<ReportRow> rows;
    const double base[2][3] = {{40, 50, 60}, {44, 58, 61}};
    const double tr[2][3] = {{70, 72, 75}, {66, 80, 79}};
    const int budgets[3] = {4, 12, 20};
    for (int r = 0; r < 2; ++r) {
        rows.push_back({"weight", "kema-identity", r, 95, "reference", 90.0 + r});
        for (int b = 0; b < 3; ++b) {
            rows.push_back({"weight", "kema-identity", r, budgets[b], "baseline", base[r][b]});
            rows.push_back({"weight", "kema-identity", r, budgets[b], "transfer", tr[r][b]});
        }
    }
    const auto charts = report_charts(rows);
    REQUIRE(charts.count("weight_kema-identity") == 1);
    const std::string svg = render_svg(charts.at("weight_kema-identity"));
    CHECK(svg.find("class=\"band\"") != std::string::npos);
    CHECK(svg.find("data-label=\"baseline\"") != std::string::npos);
    CHECK(svg.find("data-label=\"transfer\"") != std::string::npos);
    CHECK(svg.find("stroke-dasharray") != std::string::npos);

    const std::regex point("data-x=\"([^\"]+)\" data-y=\"([^\"]+)\"");
    std::vector<std::pair<double, double>> pts;
    for (auto it = std::sregex_iterator(svg.begin(), svg.end(), point); it != std::sregex_iterator(); ++it) {
        pts.push_back({std::stod((*it)[1]), std::stod((*it)[2])});
    }
    REQUIRE(pts.size() == 6);
    for (int b = 0; b < 3; ++b) {
        CHECK(pts[static_cast<std::size_t>(b)].first == budgets[b]);
        CHECK(pts[static_cast<std::size_t>(b)].second == doctest::Approx((base[0][b] + base[1][b]) / 2));
        CHECK(pts[static_cast<std::size_t>(3 + b)].second == doctest::Approx((tr[0][b] + tr[1][b]) / 2));
    }
    const auto path = testing::scratch_dir("plot") / "plots" / "chart.svg";
    write_svg(charts.at("weight_kema-identity"), path);
    CHECK(std::filesystem::file_size(path) == svg.size());
}

#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>

#include "doctest.h"

#include "equistab/commands.hpp"
#include "equistab/error.hpp"
#include "equistab/model.hpp"
#include "support.hpp"

#include "json.hpp"

using namespace equistab;
using test::vec;
using json = nlohmann::json;

namespace {

const char *oscillator_text = R"m({
  "name": "osc",
  "group": "SO2",
  "dim": 2,
  "catalog_action": "standard",
  "omega": "canonical",
  "hamiltonian": "0.5*(x1^2 + x2^2)",
  "invariants": ["x1^2 + x2^2"],
  "points": {"b": [0, 1], "a": [1, 0]}
})m";

ErrorCode code_of(const std::string &text)
{
    try {
        parse_model(text);
    } catch (const Error &e) {
        return e.code();
    }
    FAIL("model was accepted");
    return ErrorCode::InvalidModel;
}

std::string with(const std::string &key, const json &value)
{
    json j = json::parse(oscillator_text);
    if (value.is_null()) {
        j.erase(key);
    } else {
        j[key] = value;
    }
    return j.dump();
}

std::string write_temp(const std::string &name, const std::string &text)
{
    const std::string path = std::string(std::getenv("TMPDIR") ? std::getenv("TMPDIR") : "/tmp") + "/" + name;
    std::ofstream(path, std::ios::binary) << text;
    return path;
}

} // namespace

TEST_CASE("parsing a model")
{
    const Model m = parse_model(oscillator_text);
    CHECK(m.name == "osc");
    CHECK(m.system->dim() == 2);
    CHECK(m.momentum_auto);
    CHECK(m.invariants.size() == 1);
    CHECK(m.point("a") == vec({1, 0}));
    // empty name picks the alphabetically first point
    CHECK(m.point("") == vec({1, 0}));
    CHECK_THROWS_AS(m.point("missing"), Error);
    CHECK(m.hash == fnv1a_hex(oscillator_text));
    CHECK(m.hash.size() == 16);

    CHECK(parse_model(with("momentum", json::array())).momentum_auto);
    const Model ex = parse_model(with("momentum", json::array({"0.5*(x1^2 + x2^2)"})));
    CHECK_FALSE(ex.momentum_auto);
    CHECK(ex.system->momentum[0].eval(vec({1, 1})) == 1.0);
}

TEST_CASE("hash oracle")
{
    // published FNV-1a 64 test vectors
    CHECK(fnv1a_hex("") == "cbf29ce484222325");
    CHECK(fnv1a_hex("a") == "af63dc4c8601ec8c");
    CHECK(fnv1a_hex("foobar") == "85944171f73967e8");
}

TEST_CASE("schema errors")
{
    try {
        parse_model("{\"group\": \"SO2\",");
        FAIL("malformed JSON accepted");
    } catch (const ParseError &e) {
        CHECK(e.code() == ErrorCode::ParseError);
    }
    CHECK(code_of("[1, 2]") == ErrorCode::InvalidModel);
    CHECK(code_of(with("hamiltonian", nullptr)) == ErrorCode::InvalidModel);
    CHECK(code_of(with("dim", 3)) == ErrorCode::InvalidModel);
    CHECK(code_of(with("dim", -2)) == ErrorCode::InvalidModel);
    CHECK(code_of(with("catalog_action", "spin")) != ErrorCode::ParseError);
    CHECK(code_of(with("momentum", json::array({"x1", "x2"}))) == ErrorCode::InvalidModel);
    CHECK(code_of(with("points", json::object({{"p", json::array({1, 2, 3})}}))) != ErrorCode::ParseError);
    CHECK(code_of(with("hamiltonian", "x1 +")) == ErrorCode::ParseError);
    CHECK(code_of(with("hamiltonian", "x3")) == ErrorCode::VariableOutOfRange);
    CHECK_THROWS_AS(load_model("/nonexistent/model.json"), Error);
}

TEST_CASE("shipped demos load")
{
    for (const char *name : {"kepler.json", "unstable.json", "oscillator.json", "coupled_modes.json", "blowup.json"}) {
        const Model m = test::load_demo(name);
        CHECK(!m.points.empty());
        CHECK(m.invariants.size() > 0);
    }
}

TEST_CASE("verify catches a wrong momentum sign")
{
    CommandFlags f;
    const std::string good = write_temp("equistab_good.json", with("momentum", json::array({"0.5*(x1^2 + x2^2)"})));
    const std::string bad = write_temp("equistab_bad.json", with("momentum", json::array({"-0.5*(x1^2 + x2^2)"})));
    const CommandResult rg = cmd_verify(good, f);
    const CommandResult rb = cmd_verify(bad, f);
    // exactly one sign is a momentum map
    CHECK(rg.exit_code + rb.exit_code == 1);
    const CommandResult failing = rg.exit_code == 1 ? rg : rb;
    CHECK(failing.text.find("momentum_property") != std::string::npos);
    CHECK(failing.text.find("FAIL") != std::string::npos);
    CHECK_THROWS_AS(cmd_analyze(rg.exit_code == 1 ? good : bad, "a", f), Error);
    std::remove(good.c_str());
    std::remove(bad.c_str());
}

TEST_CASE("analyze reports")
{
    CommandFlags f;
    const CommandResult k = cmd_analyze(test::demo("kepler.json"), "circular", f);
    CHECK(k.exit_code == 0);
    const json r = json::parse(k.report);
    CHECK(r["stability"]["verdict"] == "StableModGmu");
    CHECK(r["certificate"]["inequalities_hold"] == true);
    CHECK(r["model"]["hash"] == test::load_demo("kepler.json").hash);
    CHECK(r["conservation"]["drift_h"].get<double>() <= 1e-6);
    CHECK_FALSE(r.contains("probe"));

    const CommandResult again = cmd_analyze(test::demo("kepler.json"), "circular", f);
    CHECK(again.report == k.report);

    const CommandResult u = cmd_analyze(test::demo("unstable.json"), "circular", f);
    CHECK(u.exit_code == 2);
    CHECK(json::parse(u.report)["stability"]["class"] == "Indefinite");

    CHECK_THROWS_AS(cmd_analyze(test::demo("kepler.json"), "nowhere", f), Error);
}

TEST_CASE("simulate output")
{
    CommandFlags f;
    f.step = 1e-2;
    f.horizon = 10.0;
    const CommandResult s = cmd_simulate(test::demo("oscillator.json"), "ring", f);
    CHECK(s.exit_code == 0);
    const std::string header = s.csv.substr(0, s.csv.find('\n'));
    CHECK(header == "t,x1,x2,h,phi2,inv1");
    std::size_t rows = 0;
    for (char c : s.csv) {
        rows += c == '\n';
    }
    CHECK(rows == 1002);
    CHECK(s.text.find("early_stop=false") != std::string::npos);

    f.field = "h_aug:0.5";
    CHECK(cmd_simulate(test::demo("oscillator.json"), "ring", f).exit_code == 0);
    f.field = "h_aug:0.5,1";
    CHECK_THROWS_AS(cmd_simulate(test::demo("oscillator.json"), "ring", f), Error);
    f.field = "h";
    f.horizon = 100.0;
    const CommandResult b = cmd_simulate(test::demo("blowup.json"), "", f);
    CHECK(b.text.find("early_stop=true") != std::string::npos);
}

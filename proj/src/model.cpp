#include "equistab/model.hpp"

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "json.hpp"

#include "equistab/error.hpp"

namespace equistab {

using nlohmann::json;

const Vec &Model::point(const std::string &n) const
{
    if (n.empty() && !points.empty()) {
        return points.begin()->second;
    }
    auto it = points.find(n);
    if (it == points.end()) {
        fail(ErrorCode::InvalidModel, "model has no point named '" + n + "'");
    }
    return it->second;
}

std::string fnv1a_hex(const std::string &bytes)
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

namespace {

[[noreturn]] void bad(const std::string &what)
{
    fail(ErrorCode::InvalidModel, what);
}

double number(const json &j, const std::string &where)
{
    if (!j.is_number()) {
        bad(where + " must be a number");
    }
    const double v = j.get<double>();
    if (!std::isfinite(v)) {
        bad(where + " is not finite");
    }
    return v;
}

Vec vector_of(const json &j, const std::string &where, Eigen::Index expected = -1)
{
    if (!j.is_array()) {
        bad(where + " must be an array of numbers");
    }
    Vec v(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) {
        v(static_cast<Eigen::Index>(i)) = number(j[i], where);
    }
    if (expected >= 0 && v.size() != expected) {
        bad(where + " must have length " + std::to_string(expected));
    }
    return v;
}

// Row-major nested arrays.
Mat matrix_of(const json &j, const std::string &where, Eigen::Index rows = -1, Eigen::Index cols = -1)
{
    if (!j.is_array() || j.empty()) {
        bad(where + " must be a nonempty list of rows");
    }
    const auto r = static_cast<Eigen::Index>(j.size());
    const Vec first = vector_of(j[0], where);
    Mat m(r, first.size());
    for (Eigen::Index i = 0; i < r; ++i) {
        const Vec row = vector_of(j[static_cast<std::size_t>(i)], where, first.size());
        m.row(i) = row.transpose();
    }
    if ((rows >= 0 && m.rows() != rows) || (cols >= 0 && m.cols() != cols)) {
        bad(where + " must be " + std::to_string(rows) + "x" + std::to_string(cols));
    }
    return m;
}

LieGroup group_of(const json &j)
{
    if (j.is_string()) {
        return LieGroup::catalog(j.get<std::string>());
    }
    if (!j.is_object()) {
        bad("\"group\" must be a catalog name or an object");
    }
    if (!j.contains("basis") || !j["basis"].is_array() || j["basis"].empty()) {
        bad("custom group needs a nonempty \"basis\"");
    }
    std::vector<Mat> basis;
    for (std::size_t i = 0; i < j["basis"].size(); ++i) {
        basis.push_back(matrix_of(j["basis"][i], "group.basis[" + std::to_string(i) + "]"));
    }
    const auto d = static_cast<Eigen::Index>(basis.size());
    std::optional<Mat> inner;
    if (j.contains("inner_product")) {
        inner = matrix_of(j["inner_product"], "group.inner_product", d, d);
    }
    std::optional<std::vector<Vec>> compact;
    if (j.contains("compact_basis")) {
        std::vector<Vec> c;
        for (const auto &v : j["compact_basis"]) {
            c.push_back(vector_of(v, "group.compact_basis", d));
        }
        compact = c;
    }
    const std::string name = j.value("name", std::string("custom"));
    return LieGroup(name, std::move(basis), inner, {}, 1e-9, compact);
}

Expression expression_of(const json &j, int n, const std::string &where)
{
    if (!j.is_string()) {
        bad(where + " must be an expression string");
    }
    return Expression::parse(j.get<std::string>(), n);
}

} // namespace

Model parse_model(const std::string &text)
{
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error &e) {
        throw ParseError(e.byte > 0 ? e.byte - 1 : 0, "valid JSON", text.substr(0, 64));
    }
    if (!j.is_object()) {
        bad("model must be a JSON object");
    }
    for (const char *key : {"group", "dim", "omega", "hamiltonian"}) {
        if (!j.contains(key)) {
            bad(std::string("model is missing \"") + key + "\"");
        }
    }
    Model model;
    model.hash = fnv1a_hex(text);
    model.name = j.value("name", std::string("model"));
    if (!j["dim"].is_number_integer() || j["dim"].get<int>() <= 0) {
        bad("\"dim\" must be a positive integer");
    }
    const int n = j["dim"].get<int>();

    if (j.contains("assertions")) {
        const json &a = j["assertions"];
        model.proper_action = a.value("proper_action", false);
        model.orthogonal = a.value("orthogonal", true);
    }

    LieGroup group = group_of(j["group"]);
    const int d = group.dim();
    std::optional<LinearGAction> action;
    if (j.contains("catalog_action")) {
        if (!j["catalog_action"].is_string()) {
            bad("\"catalog_action\" must be a string");
        }
        action.emplace(LinearGAction::catalog(group, j["catalog_action"].get<std::string>()));
    } else if (j.contains("algebra_rep")) {
        const json &r = j["algebra_rep"];
        if (!r.is_array() || static_cast<int>(r.size()) != d) {
            bad("\"algebra_rep\" needs one matrix per algebra generator");
        }
        std::vector<Mat> rep;
        for (std::size_t i = 0; i < r.size(); ++i) {
            rep.push_back(matrix_of(r[i], "algebra_rep[" + std::to_string(i) + "]", n, n));
        }
        std::vector<Vec> aff;
        if (j.contains("affine_part")) {
            const json &a = j["affine_part"];
            if (!a.is_array() || static_cast<int>(a.size()) != d) {
                bad("\"affine_part\" needs one translation per algebra generator");
            }
            for (const auto &t : a) {
                aff.push_back(vector_of(t, "affine_part", n));
            }
        }
        action.emplace(group, std::move(rep), std::move(aff), model.orthogonal);
    } else {
        bad("model needs \"catalog_action\" or \"algebra_rep\"");
    }
    if (action->dim() != n) {
        bad("action acts on R^" + std::to_string(action->dim()) + " but \"dim\" is " + std::to_string(n));
    }

    const json &jw = j["omega"];
    const SymplecticStructure omega =
        jw.is_string() ? SymplecticStructure::named(jw.get<std::string>(), n)
                       : SymplecticStructure(matrix_of(jw, "omega", n, n));

    const Expression h = expression_of(j["hamiltonian"], n, "\"hamiltonian\"");

    std::vector<Expression> momentum;
    const json mom = j.contains("momentum") ? j["momentum"] : json("auto");
    if ((mom.is_string() && mom.get<std::string>() == "auto") || (mom.is_array() && mom.empty())) {
        momentum = quadratic_momentum(*action, omega);
        model.momentum_auto = true;
    } else if (mom.is_array()) {
        if (static_cast<int>(mom.size()) != d) {
            bad("\"momentum\" needs one component per algebra generator");
        }
        for (std::size_t i = 0; i < mom.size(); ++i) {
            momentum.push_back(expression_of(mom[i], n, "momentum[" + std::to_string(i) + "]"));
        }
    } else {
        bad("\"momentum\" must be \"auto\" or a list of expressions");
    }

    model.system = std::make_shared<const HamiltonianSystem>(*action, omega, h, std::move(momentum));

    if (j.contains("invariants")) {
        if (!j["invariants"].is_array()) {
            bad("\"invariants\" must be a list of expressions");
        }
        for (std::size_t i = 0; i < j["invariants"].size(); ++i) {
            model.invariants.generators.push_back(
                expression_of(j["invariants"][i], n, "invariants[" + std::to_string(i) + "]"));
        }
    }
    if (j.contains("points")) {
        if (!j["points"].is_object()) {
            bad("\"points\" must map names to coordinate vectors");
        }
        for (auto it = j["points"].begin(); it != j["points"].end(); ++it) {
            model.points.emplace(it.key(), vector_of(it.value(), "points." + it.key(), n));
        }
    }
    return model;
}

Model load_model(const std::string &path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        fail(ErrorCode::InvalidModel, "cannot open model file '" + path + "'");
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_model(ss.str());
}

} // namespace equistab

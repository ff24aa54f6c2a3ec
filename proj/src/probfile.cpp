#include "polycert/probfile.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace polycert::probfile {

namespace {

std::string strip(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

// removes a trailing "<op> 0" and returns the polynomial part
std::string strip_relation(const std::string& line, const std::string& op,
                           bool& matched) {
    const std::size_t pos = line.rfind(op);
    matched = false;
    if (pos == std::string::npos) return "";
    const std::string rhs = strip(line.substr(pos + op.size()));
    if (rhs != "0") return "";
    matched = true;
    return strip(line.substr(0, pos));
}

}  // namespace

poly::ProblemInstance parse_problem(const std::string& text) {
    poly::ProblemInstance inst;
    std::istringstream in(text);
    std::string line;
    std::string objective_text;
    bool in_constraints = false;
    bool have_vars = false;
    bool have_objective = false;
    std::vector<std::string> constraint_lines;
    int lineno = 0;

    while (std::getline(in, line)) {
        ++lineno;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = strip(line);
        if (line.empty()) continue;

        if (line.rfind("vars:", 0) == 0) {
            std::istringstream vs(line.substr(5));
            std::string name;
            while (vs >> name) inst.variables.push_back(name);
            have_vars = true;
            in_constraints = false;
        } else if (line.rfind("minimize:", 0) == 0) {
            objective_text = strip(line.substr(9));
            have_objective = true;
            in_constraints = false;
        } else if (line.rfind("subject_to:", 0) == 0) {
            in_constraints = true;
            const std::string rest = strip(line.substr(11));
            if (!rest.empty()) constraint_lines.push_back(rest);
        } else if (in_constraints) {
            constraint_lines.push_back(line);
        } else {
            throw std::runtime_error("problem file: unexpected line " +
                                     std::to_string(lineno) + ": " + line);
        }
    }
    if (!have_vars) throw std::runtime_error("problem file: missing vars: section");
    if (inst.variables.empty())
        throw std::runtime_error("problem file: empty variable list");
    if (!have_objective)
        throw std::runtime_error("problem file: missing minimize: section");

    inst.objective = poly::parse_polynomial(objective_text, inst.variables);
    for (const auto& cl : constraint_lines) {
        bool matched = false;
        std::string body = strip_relation(cl, "==", matched);
        if (matched) {
            inst.equalities.push_back(poly::parse_polynomial(body, inst.variables));
            continue;
        }
        body = strip_relation(cl, ">=", matched);
        if (matched) {
            inst.inequalities.push_back(poly::parse_polynomial(body, inst.variables));
            continue;
        }
        throw std::runtime_error("problem file: constraint must end in '== 0' or "
                                 "'>= 0': " + cl);
    }
    inst.validate();
    return inst;
}

poly::ProblemInstance read_problem(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    return parse_problem(ss.str());
}

std::string problem_to_string(const poly::ProblemInstance& inst) {
    inst.validate();
    std::ostringstream out;
    out << "vars:";
    for (const auto& v : inst.variables) out << " " << v;
    out << "\n";
    out << "minimize: " << poly::to_string(inst.objective, inst.variables) << "\n";
    if (!inst.equalities.empty() || !inst.inequalities.empty()) {
        out << "subject_to:\n";
        for (const auto& g : inst.equalities)
            out << poly::to_string(g, inst.variables) << " == 0\n";
        for (const auto& g : inst.inequalities)
            out << poly::to_string(g, inst.variables) << " >= 0\n";
    }
    return out.str();
}

void write_problem(const poly::ProblemInstance& inst, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot open " + path + " for writing");
    f << problem_to_string(inst);
}

}  // namespace polycert::probfile

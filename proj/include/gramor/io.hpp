#pragma once

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "gramor/errors.hpp"
#include "gramor/matrix.hpp"
#include "gramor/system.hpp"

namespace gramor {

using Json = nlohmann::json;

inline Json matrix_to_json(const Matrix& M) {
    Json rows = Json::array();
    for (Index i = 0; i < M.rows(); ++i) {
        Json row = Json::array();
        for (Index j = 0; j < M.cols(); ++j) row.push_back(M(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

inline Matrix matrix_from_json(const Json& j, const std::string& name) {
    if (!j.is_array() || j.empty() || !j[0].is_array())
        throw ArgumentError("field '" + name + "' must be a nested array (row-major matrix)");
    const Index rows = static_cast<Index>(j.size());
    const Index cols = static_cast<Index>(j[0].size());
    Matrix M(rows, cols);
    for (Index i = 0; i < rows; ++i) {
        if (static_cast<Index>(j[static_cast<std::size_t>(i)].size()) != cols)
            throw ArgumentError("field '" + name + "' has ragged rows");
        for (Index k = 0; k < cols; ++k)
            M(i, k) = j[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)].get<double>();
    }
    return M;
}

using AnySystem = std::variant<StochasticLinearSystem, BilinearControlSystem>;

inline Json system_to_json(const StochasticLinearSystem& sys) {
    Json j;
    j["kind"] = "stochastic";
    j["n"] = sys.n();
    j["m"] = sys.m();
    j["q"] = sys.q();
    j["A"] = matrix_to_json(sys.A);
    Json ns = Json::array();
    for (const Matrix& Ni : sys.N) ns.push_back(matrix_to_json(Ni));
    j["N"] = std::move(ns);
    j["B"] = matrix_to_json(sys.B);
    return j;
}

inline Json system_to_json(const BilinearControlSystem& sys) {
    Json j;
    j["kind"] = "bilinear";
    j["n"] = sys.n();
    j["m"] = sys.m();
    j["q"] = sys.m();  // one N per input channel
    j["A"] = matrix_to_json(sys.A);
    Json ns = Json::array();
    for (const Matrix& Ni : sys.N) ns.push_back(matrix_to_json(Ni));
    j["N"] = std::move(ns);
    j["B"] = matrix_to_json(sys.B);
    j["gamma"] = sys.gamma;
    return j;
}

inline AnySystem system_from_json(const Json& j) {
    const std::string kind = j.value("kind", "");
    Matrix A = matrix_from_json(j.at("A"), "A");
    Matrix B = matrix_from_json(j.at("B"), "B");
    std::vector<Matrix> N;
    for (std::size_t i = 0; i < j.at("N").size(); ++i)
        N.push_back(matrix_from_json(j.at("N")[i], "N[" + std::to_string(i) + "]"));
    if (kind == "stochastic") {
        StochasticLinearSystem sys{std::move(A), std::move(N), std::move(B)};
        auto violations = validate_system(sys);
        if (!violations.empty()) throw ArgumentError("invalid system: " + violations.front());
        return sys;
    }
    if (kind == "bilinear") {
        BilinearControlSystem sys{std::move(A), std::move(N), std::move(B),
                                  j.value("gamma", 1.0)};
        auto violations = validate_system(sys);
        if (!violations.empty()) throw ArgumentError("invalid system: " + violations.front());
        return sys;
    }
    throw ArgumentError("unknown system kind '" + kind + "'");
}

inline void write_json_file(const std::string& path, const Json& j) {
    std::ofstream out(path);
    if (!out) throw ArgumentError("cannot open '" + path + "' for writing");
    out << j.dump(2) << "\n";
}

inline Json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ArgumentError("cannot open '" + path + "'");
    Json j;
    in >> j;
    return j;
}

/// FNV-1a content hash, printed as 16 hex digits; stable across runs.
inline std::string fnv1a_hex(const std::string& bytes) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return std::string(buf);
}

inline std::string hash_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ArgumentError("cannot open '" + path + "' for hashing");
    std::ostringstream ss;
    ss << in.rdbuf();
    return fnv1a_hex(ss.str());
}

inline Json rom_to_json(const GalerkinRom& rom, const Json& reducedSystem,
                        const std::string& parentHash) {
    Json j = reducedSystem;
    Json proj;
    proj["method"] = to_string(rom.method);
    proj["r"] = rom.r();
    proj["sourceDim"] = rom.sourceDim;
    proj["V"] = matrix_to_json(rom.V);
    proj["W"] = matrix_to_json(rom.W);
    proj["parentHash"] = parentHash;
    j["projection"] = std::move(proj);
    return j;
}

inline GalerkinRom rom_from_json(const Json& j) {
    if (!j.contains("projection")) throw ArgumentError("file carries no projection block");
    const Json& p = j["projection"];
    GalerkinRom rom;
    rom.V = matrix_from_json(p.at("V"), "projection.V");
    rom.W = matrix_from_json(p.at("W"), "projection.W");
    rom.method = p.at("method").get<std::string>() == "BT" ? ReductionMethod::BT
                                                           : ReductionMethod::OS;
    rom.sourceDim = p.at("sourceDim").get<Index>();
    rom.reducedA = matrix_from_json(j.at("A"), "A");
    for (std::size_t i = 0; i < j.at("N").size(); ++i)
        rom.reducedN.push_back(matrix_from_json(j.at("N")[i], "N"));
    rom.reducedB = matrix_from_json(j.at("B"), "B");
    return rom;
}

/// CSV with a header row; values printed with 17 significant digits.
class CsvWriter {
public:
    explicit CsvWriter(const std::string& path) : out_(path) {
        if (!out_) throw ArgumentError("cannot open '" + path + "' for writing");
    }

    void header(const std::vector<std::string>& cols) {
        for (std::size_t i = 0; i < cols.size(); ++i)
            out_ << (i ? "," : "") << cols[i];
        out_ << "\n";
    }

    void row(const std::vector<std::variant<std::string, double, long long>>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) out_ << ",";
            if (const auto* s = std::get_if<std::string>(&cells[i])) {
                out_ << *s;
            } else if (const auto* d = std::get_if<double>(&cells[i])) {
                char buf[40];
                std::snprintf(buf, sizeof buf, "%.17g", *d);
                out_ << buf;
            } else {
                out_ << std::get<long long>(cells[i]);
            }
        }
        out_ << "\n";
    }

private:
    std::ofstream out_;
};

}  // namespace gramor

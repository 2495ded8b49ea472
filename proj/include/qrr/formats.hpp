// Copyright 2026 The qrr Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "qrr/correlation.hpp"
#include "qrr/error.hpp"
#include "qrr/instance_io.hpp"
#include "qrr/problem.hpp"
#include "qrr/samples.hpp"

namespace qrr {

inline std::string read_file(const std::string &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open '" + path + "' for reading");
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

inline void write_file(const std::string &path, const std::string &contents) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw IoError("cannot open '" + path + "' for writing");
    }
    out << contents;
    if (!out) {
        throw IoError("failed writing '" + path + "'");
    }
}

/// JSON when the text starts with '{' (after whitespace), edge list otherwise.
inline InstanceFormat detect_instance_format(const std::string &text) {
    const auto pos = text.find_first_not_of(" \t\r\n");
    return pos != std::string::npos && text[pos] == '{' ? InstanceFormat::Structured : InstanceFormat::EdgeList;
}

inline ProblemInstance load_instance(const std::string &path) {
    const std::string text = read_file(path);
    try {
        return parse_instance(text, detect_instance_format(text));
    } catch (const SchemaError &e) {
        throw SchemaError(path + ": " + e.what());
    }
}

// ---------------------------------------------------------------------------
// Stats: {"version":1,"n":N,"mu":[...],"sigma":[row-major n*n], "sigma_se"?:[...]}
// ---------------------------------------------------------------------------

namespace detail {

inline void append_array(std::string &out, const double *data, std::size_t count) {
    out += '[';
    for (std::size_t k = 0; k < count; ++k) {
        if (k) {
            out += ',';
        }
        out += format_double(data[k]);
    }
    out += ']';
}

inline std::vector<double> row_major(const Eigen::MatrixXd &m) {
    std::vector<double> v;
    v.reserve(static_cast<std::size_t>(m.size()));
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            v.push_back(m(i, j));
        }
    }
    return v;
}

}  // namespace detail

inline std::string serialize_stats(const CorrelationStats &stats, const Eigen::MatrixXd *sigma_se = nullptr) {
    stats.check_shape();
    std::string out = "{\"version\":1,\"n\":" + std::to_string(stats.n()) + ",\"mu\":";
    detail::append_array(out, stats.mu.data(), static_cast<std::size_t>(stats.mu.size()));
    out += ",\"sigma\":";
    const auto sigma = detail::row_major(stats.sigma);
    detail::append_array(out, sigma.data(), sigma.size());
    if (sigma_se != nullptr) {
        out += ",\"sigma_se\":";
        const auto se = detail::row_major(*sigma_se);
        detail::append_array(out, se.data(), se.size());
    }
    out += "}\n";
    return out;
}

struct StatsFile {
    CorrelationStats stats;
    std::optional<Eigen::MatrixXd> sigma_se;
};

inline StatsFile parse_stats(const std::string &text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error &e) {
        throw SchemaError(std::string("stats JSON: ") + e.what());
    }
    if (!doc.is_object()) {
        throw SchemaError("stats JSON: top level must be an object");
    }
    for (const char *field : {"version", "n", "mu", "sigma"}) {
        if (!doc.contains(field)) {
            throw SchemaError(std::string("stats JSON: missing field '") + field + "'");
        }
    }
    if (!doc["version"].is_number_integer() || doc["version"].get<int>() != 1) {
        throw SchemaError("stats JSON: field 'version' must be 1");
    }
    if (!doc["n"].is_number_integer() || doc["n"].get<long>() < 1) {
        throw SchemaError("stats JSON: field 'n' must be a positive integer");
    }
    const int n = doc["n"].get<int>();
    auto numbers = [&](const char *field, std::size_t expected) {
        const auto &arr = doc[field];
        if (!arr.is_array() || arr.size() != expected) {
            throw SchemaError(std::string("stats JSON: field '") + field + "' must be an array of " +
                              std::to_string(expected) + " numbers");
        }
        std::vector<double> v;
        for (const auto &x : arr) {
            if (!x.is_number()) {
                throw SchemaError(std::string("stats JSON: field '") + field + "' must hold numbers");
            }
            v.push_back(x.get<double>());
        }
        return v;
    };
    const std::size_t nn = static_cast<std::size_t>(n) * n;
    auto to_matrix = [&](const std::vector<double> &v) {
        Eigen::MatrixXd m(n, n);
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < n; ++j) {
                m(i, j) = v[static_cast<std::size_t>(i) * n + j];
            }
        }
        return m;
    };
    StatsFile file;
    const auto mu = numbers("mu", static_cast<std::size_t>(n));
    file.stats.mu = Eigen::Map<const Eigen::VectorXd>(mu.data(), n);
    file.stats.sigma = to_matrix(numbers("sigma", nn));
    if (doc.contains("sigma_se")) {
        file.sigma_se = to_matrix(numbers("sigma_se", nn));
    }
    if (!file.stats.mu.allFinite() || !file.stats.sigma.allFinite()) {
        throw SchemaError("stats JSON: fields 'mu' and 'sigma' must be finite");
    }
    if ((file.stats.sigma - file.stats.sigma.transpose()).cwiseAbs().maxCoeff() > 1e-12) {
        throw SchemaError("stats JSON: field 'sigma' must be symmetric");
    }
    return file;
}

inline StatsFile load_stats(const std::string &path) {
    try {
        return parse_stats(read_file(path));
    } catch (const SchemaError &e) {
        throw SchemaError(path + ": " + e.what());
    }
}

// ---------------------------------------------------------------------------
// Samples CSV: header z0,...,z{n-1},cost; one row of +-1 signs per sample.
// An empty cost cell means no instance was supplied.
// ---------------------------------------------------------------------------

inline std::string serialize_samples(const SampleBatch &batch) {
    std::string out;
    for (int i = 0; i < batch.n; ++i) {
        out += 'z' + std::to_string(i) + ',';
    }
    out += "cost\n";
    const bool with_cost = batch.costs.size() == batch.size();
    for (std::size_t k = 0; k < batch.size(); ++k) {
        for (Spin s : batch.row(k)) {
            out += s > 0 ? "1," : "-1,";
        }
        if (with_cost) {
            out += format_double(batch.costs[k]);
        }
        out += '\n';
    }
    return out;
}

inline SampleBatch parse_samples(const std::string &text, Provenance provenance) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) {
        throw SchemaError("samples CSV: missing header");
    }
    std::vector<std::string> header;
    {
        std::stringstream hs(line);
        std::string cell;
        while (std::getline(hs, cell, ',')) {
            header.push_back(cell);
        }
    }
    const int n = static_cast<int>(header.size()) - 1;
    if (n < 1 || header.back() != "cost") {
        throw SchemaError("samples CSV: header must be z0,...,z{n-1},cost");
    }
    for (int i = 0; i < n; ++i) {
        if (header[i] != "z" + std::to_string(i)) {
            throw SchemaError("samples CSV: header column " + std::to_string(i) + " must be 'z" + std::to_string(i) +
                              "'");
        }
    }
    SampleBatch batch(n, 0, provenance);
    std::vector<double> costs;
    bool any_cost = false;
    bool all_cost = true;
    long row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (line.empty()) {
            continue;
        }
        std::vector<std::string> cells;
        std::stringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) {
            cells.push_back(cell);
        }
        if (line.back() == ',') {
            cells.emplace_back();
        }
        if (static_cast<int>(cells.size()) != n + 1) {
            throw SchemaError("samples CSV: row " + std::to_string(row) + " has " + std::to_string(cells.size()) +
                              " cells, expected " + std::to_string(n + 1));
        }
        for (int i = 0; i < n; ++i) {
            if (cells[i] == "1" || cells[i] == "+1") {
                batch.spins.push_back(1);
            } else if (cells[i] == "-1") {
                batch.spins.push_back(-1);
            } else {
                throw SchemaError("samples CSV: row " + std::to_string(row) + " column z" + std::to_string(i) +
                                  " must be -1 or 1");
            }
        }
        if (cells[n].empty()) {
            all_cost = false;
        } else {
            double c = 0;
            if (!detail::parse_real(cells[n], c)) {
                throw SchemaError("samples CSV: row " + std::to_string(row) + " column cost is not a number");
            }
            costs.push_back(c);
            any_cost = true;
        }
    }
    if (any_cost && !all_cost) {
        throw SchemaError("samples CSV: column cost must be filled on every row or on none");
    }
    if (any_cost) {
        batch.costs = std::move(costs);
    }
    return batch;
}

}  // namespace qrr

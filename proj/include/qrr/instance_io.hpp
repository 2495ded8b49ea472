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

#include <cerrno>
#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "qrr/error.hpp"
#include "qrr/problem.hpp"

namespace qrr {

enum class InstanceFormat { EdgeList, Structured };

/// Shortest decimal text that parses back to the identical double.
inline std::string format_double(double v) {
    char buf[40];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

namespace detail {

inline std::vector<std::string> split_ws(const std::string &line) {
    std::istringstream in(line);
    std::vector<std::string> out;
    std::string tok;
    while (in >> tok) {
        out.push_back(tok);
    }
    return out;
}

inline bool parse_long(const std::string &tok, long &out) {
    if (tok.empty()) {
        return false;
    }
    char *end = nullptr;
    errno = 0;
    out = std::strtol(tok.c_str(), &end, 10);
    return errno == 0 && *end == '\0';
}

inline bool parse_real(const std::string &tok, double &out) {
    if (tok.empty()) {
        return false;
    }
    char *end = nullptr;
    out = std::strtod(tok.c_str(), &end);
    return *end == '\0';
}

inline ProblemInstance parse_edge_list(const std::string &text) {
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    long n = -1;
    long m = -1;
    std::vector<Edge> edges;
    std::set<std::pair<int, int>> seen;
    auto fail = [&](const std::string &msg) -> SchemaError {
        return SchemaError("line " + std::to_string(line_no) + ": " + msg);
    };
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        auto first = line.find_first_not_of(" \t");
        if (first == std::string::npos || line[first] == '#') {
            continue;
        }
        auto tok = split_ws(line);
        if (n < 0) {
            if (tok.size() != 2 || !parse_long(tok[0], n) || !parse_long(tok[1], m) || n < 1 || m < 0) {
                throw fail("expected header 'n m' with n >= 1 and m >= 0");
            }
            continue;
        }
        if (static_cast<long>(edges.size()) == m) {
            throw fail("more edge lines than the declared m=" + std::to_string(m));
        }
        long i = 0;
        long j = 0;
        double w = 0;
        if (tok.size() != 3 || !parse_long(tok[0], i) || !parse_long(tok[1], j) || !parse_real(tok[2], w)) {
            throw fail("expected 'i j w'");
        }
        if (i < 0 || i >= n) {
            throw fail("index " + std::to_string(i) + " out of range for n=" + std::to_string(n));
        }
        if (j < 0 || j >= n) {
            throw fail("index " + std::to_string(j) + " out of range for n=" + std::to_string(n));
        }
        if (i == j) {
            throw fail("self-loop on node " + std::to_string(i));
        }
        if (i > j) {
            std::swap(i, j);
        }
        if (!std::isfinite(w)) {
            throw fail("non-finite weight");
        }
        if (!(w > 0)) {
            throw fail("Max-Cut weight must be positive, got " + tok[2]);
        }
        if (!seen.insert({static_cast<int>(i), static_cast<int>(j)}).second) {
            throw fail("duplicate edge (" + std::to_string(i) + "," + std::to_string(j) + ")");
        }
        edges.push_back({static_cast<int>(i), static_cast<int>(j), w});
    }
    if (n < 0) {
        throw SchemaError("empty instance: missing 'n m' header");
    }
    if (static_cast<long>(edges.size()) != m) {
        throw SchemaError("declared m=" + std::to_string(m) + " edges but found " + std::to_string(edges.size()));
    }
    return ProblemInstance::make(static_cast<int>(n), ProblemKind::MaxCut, std::move(edges));
}

inline ProblemInstance parse_structured(const std::string &text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error &e) {
        throw SchemaError(std::string("instance JSON: ") + e.what());
    }
    auto need = [&](const char *field) -> const nlohmann::json & {
        if (!doc.is_object() || !doc.contains(field)) {
            throw SchemaError(std::string("instance JSON: missing field '") + field + "'");
        }
        return doc.at(field);
    };
    const auto &version = need("version");
    if (!version.is_number_integer() || version.get<int>() != 1) {
        throw SchemaError("instance JSON: field 'version' must be 1");
    }
    const auto &n_field = need("n");
    if (!n_field.is_number_integer() || n_field.get<long>() < 1) {
        throw SchemaError("instance JSON: field 'n' must be a positive integer");
    }
    const int n = n_field.get<int>();
    const auto &kind_field = need("kind");
    if (!kind_field.is_string() || (kind_field != "maxcut" && kind_field != "qubo")) {
        throw SchemaError("instance JSON: field 'kind' must be \"maxcut\" or \"qubo\"");
    }
    const ProblemKind kind = problem_kind_from_string(kind_field.get<std::string>());
    const auto &edges_field = need("edges");
    if (!edges_field.is_array()) {
        throw SchemaError("instance JSON: field 'edges' must be an array");
    }
    std::vector<Edge> edges;
    for (std::size_t k = 0; k < edges_field.size(); ++k) {
        const auto &e = edges_field[k];
        const std::string where = "instance JSON: edges[" + std::to_string(k) + "]";
        if (!e.is_array() || e.size() != 3 || !e[0].is_number_integer() || !e[1].is_number_integer() ||
            !e[2].is_number()) {
            throw SchemaError(where + " must be [i, j, w]");
        }
        edges.push_back({e[0].get<int>(), e[1].get<int>(), e[2].get<double>()});
    }
    std::vector<double> diagonal;
    if (doc.contains("diagonal")) {
        const auto &d = doc.at("diagonal");
        if (!d.is_array()) {
            throw SchemaError("instance JSON: field 'diagonal' must be an array");
        }
        for (const auto &v : d) {
            if (!v.is_number()) {
                throw SchemaError("instance JSON: field 'diagonal' must hold numbers");
            }
            diagonal.push_back(v.get<double>());
        }
    }
    std::string label;
    if (doc.contains("label")) {
        if (!doc.at("label").is_string()) {
            throw SchemaError("instance JSON: field 'label' must be a string");
        }
        label = doc.at("label").get<std::string>();
    }
    try {
        return ProblemInstance::make(n, kind, std::move(edges), std::move(diagonal), std::move(label));
    } catch (const ArgumentError &e) {
        throw SchemaError(std::string("instance JSON: ") + e.what());
    }
}

}  // namespace detail

/// Parses either the whitespace edge list (`n m` header, then `i j w` lines,
/// `#` comments, always Max-Cut) or the versioned JSON document.
inline ProblemInstance parse_instance(const std::string &text, InstanceFormat format) {
    if (text.empty()) {
        throw SchemaError("instance text is empty");
    }
    return format == InstanceFormat::EdgeList ? detail::parse_edge_list(text) : detail::parse_structured(text);
}

inline std::string serialize_instance(const ProblemInstance &instance, InstanceFormat format) {
    std::string out;
    if (format == InstanceFormat::EdgeList) {
        if (instance.kind() != ProblemKind::MaxCut) {
            throw ArgumentError("the edge-list format only carries Max-Cut instances; use the structured format");
        }
        out += std::to_string(instance.n()) + " " + std::to_string(instance.edges().size()) + "\n";
        for (const auto &e : instance.edges()) {
            out += std::to_string(e.i) + " " + std::to_string(e.j) + " " + format_double(e.w) + "\n";
        }
        return out;
    }
    out += "{\"version\":1,\"n\":" + std::to_string(instance.n()) + ",\"kind\":\"" + to_string(instance.kind()) +
           "\",\"edges\":[";
    for (std::size_t k = 0; k < instance.edges().size(); ++k) {
        const auto &e = instance.edges()[k];
        out += (k ? "," : "");
        out += "[" + std::to_string(e.i) + "," + std::to_string(e.j) + "," + format_double(e.w) + "]";
    }
    out += "]";
    if (!instance.diagonal().empty()) {
        out += ",\"diagonal\":[";
        for (std::size_t k = 0; k < instance.diagonal().size(); ++k) {
            out += (k ? "," : "") + format_double(instance.diagonal()[k]);
        }
        out += "]";
    }
    out += ",\"label\":" + nlohmann::json(instance.label()).dump() + "}\n";
    return out;
}

}  // namespace qrr

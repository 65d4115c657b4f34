#include "structem/io.hpp"
#include "structem/common.hpp"

#include <json.hpp>

#include <algorithm>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace structem {

using nlohmann::json;

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open '" + path + "' for reading");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
    out << content;
}

}  // namespace

std::string network_to_json(const Network& net) {
    const Structure& s = net.structure;
    json doc;
    json vars = json::array();
    for (const Variable& v : s.variables) {
        json jv;
        jv["name"] = v.name;
        jv["states"] = v.states;
        jv["hidden"] = v.hidden;
        vars.push_back(jv);
    }
    doc["variables"] = vars;
    json parents = json::object();
    json cpt = json::object();
    for (int i = 0; i < s.n(); ++i) {
        json plist = json::array();
        for (int p : s.parents[i]) plist.push_back(s.variables[p].name);
        parents[s.variables[i].name] = plist;
        const Cpt& table = net.parameters.cpts[i];
        json rows = json::array();
        for (std::size_t c = 0; c < table.n_configs; ++c) {
            json row = json::array();
            for (int x = 0; x < table.arity; ++x) row.push_back(table.at(c, x));
            rows.push_back(row);
        }
        cpt[s.variables[i].name] = rows;
    }
    doc["parents"] = parents;
    doc["cpt"] = cpt;
    return doc.dump(2) + "\n";
}

Network network_from_json(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw std::runtime_error(std::string("network JSON parse error: ") + e.what());
    }
    Network net;
    Structure& s = net.structure;
    if (!doc.contains("variables") || !doc["variables"].is_array() || doc["variables"].empty())
        throw std::runtime_error("network JSON: missing or empty 'variables' array");
    for (const auto& jv : doc["variables"]) {
        Variable v;
        v.name = jv.at("name").get<std::string>();
        v.states = jv.at("states").get<std::vector<std::string>>();
        v.hidden = jv.value("hidden", false);
        s.variables.push_back(std::move(v));
    }
    s.parents.assign(s.variables.size(), {});
    if (doc.contains("parents")) {
        for (const auto& [child, plist] : doc["parents"].items()) {
            int ci = s.find_variable(child);
            if (ci < 0) throw std::runtime_error("network JSON: unknown child variable '" + child + "'");
            for (const auto& pname : plist) {
                int pi = s.find_variable(pname.get<std::string>());
                if (pi < 0)
                    throw std::runtime_error("network JSON: unknown parent '" +
                                             pname.get<std::string>() + "' of '" + child + "'");
                s.parents[ci].push_back(pi);
            }
            std::sort(s.parents[ci].begin(), s.parents[ci].end());
        }
    }
    net.parameters.cpts.resize(s.n());
    for (int i = 0; i < s.n(); ++i) {
        const std::string& name = s.variables[i].name;
        Cpt& table = net.parameters.cpts[i];
        table.arity = s.arity(i);
        table.n_configs = s.n_parent_configs(i);
        table.p.assign(table.n_configs * table.arity, 0.0);
        if (!doc.contains("cpt") || !doc["cpt"].contains(name))
            throw std::runtime_error("network JSON: missing CPT for variable '" + name + "'");
        const json& rows = doc["cpt"][name];
        if (rows.size() != table.n_configs)
            throw std::runtime_error("network JSON: CPT of '" + name + "' has " +
                                     std::to_string(rows.size()) + " rows, expected " +
                                     std::to_string(table.n_configs));
        for (std::size_t c = 0; c < table.n_configs; ++c) {
            const json& row = rows[c];
            if (row.size() != static_cast<std::size_t>(table.arity))
                throw std::runtime_error("network JSON: CPT row width mismatch for '" + name + "'");
            for (int x = 0; x < table.arity; ++x) table.at(c, x) = row[x].get<double>();
        }
    }
    auto report = validate(s, net.parameters);
    if (!report.empty()) throw std::runtime_error("network JSON: invalid network: " + report.front());
    return net;
}

Network read_network(const std::string& path) {
    try {
        return network_from_json(read_file(path));
    } catch (const std::exception& e) {
        throw std::runtime_error(std::string(e.what()) + " (file '" + path + "')");
    }
}

void write_network(const std::string& path, const Network& net) {
    write_file(path, network_to_json(net));
}

std::vector<DatasetVariable> observed_schema(const Structure& s) {
    std::vector<DatasetVariable> schema;
    for (const Variable& v : s.variables)
        if (!v.hidden) schema.push_back(DatasetVariable{v.name, v.states});
    return schema;
}

std::string dataset_to_csv(const Dataset& d, const std::string& missing_marker) {
    std::ostringstream out;
    for (std::size_t c = 0; c < d.variables.size(); ++c) {
        if (c) out << ',';
        out << d.variables[c].name;
    }
    out << '\n';
    for (const auto& row : d.records) {
        for (std::size_t c = 0; c < row.size(); ++c) {
            if (c) out << ',';
            out << (row[c] == kMissing ? missing_marker : d.variables[c].states[row[c]]);
        }
        out << '\n';
    }
    return out.str();
}

void write_dataset_csv(const std::string& path, const Dataset& d, const std::string& missing_marker) {
    write_file(path, dataset_to_csv(d, missing_marker));
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            cells.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(ch);
        }
    }
    cells.push_back(cur);
    return cells;
}

Dataset parse_csv(const std::string& text, const std::vector<DatasetVariable>* schema,
                  const std::string& missing_marker) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("CSV parse error at line 1: empty input");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::vector<std::string> header = split_csv_line(line);

    Dataset d;
    d.variables.resize(header.size());
    for (std::size_t c = 0; c < header.size(); ++c) {
        if (header[c].empty())
            throw std::runtime_error("CSV parse error at line 1, column " + std::to_string(c + 1) +
                                     ": empty variable name");
        d.variables[c].name = header[c];
    }
    if (schema) {
        for (std::size_t c = 0; c < header.size(); ++c) {
            auto it = std::find_if(schema->begin(), schema->end(),
                                   [&](const DatasetVariable& v) { return v.name == header[c]; });
            if (it == schema->end())
                throw std::runtime_error("CSV column '" + header[c] + "' is not a known variable");
            d.variables[c].states = it->states;
        }
    }

    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() && in.eof()) break;
        std::vector<std::string> cells = split_csv_line(line);
        if (cells.size() != header.size())
            throw std::runtime_error("CSV parse error at line " + std::to_string(line_no) + ": got " +
                                     std::to_string(cells.size()) + " cells, expected " +
                                     std::to_string(header.size()));
        std::vector<int> row(cells.size(), kMissing);
        for (std::size_t c = 0; c < cells.size(); ++c) {
            const std::string& cell = cells[c];
            if (cell == missing_marker) continue;
            auto& states = d.variables[c].states;
            auto it = std::find(states.begin(), states.end(), cell);
            if (it == states.end()) {
                if (schema)
                    throw std::runtime_error("unknown state label '" + cell + "' for variable '" +
                                             d.variables[c].name + "' at line " + std::to_string(line_no));
                states.push_back(cell);
                it = std::prev(states.end());
            }
            row[c] = static_cast<int>(it - states.begin());
        }
        d.records.push_back(std::move(row));
    }
    return d;
}

}  // namespace

Dataset dataset_from_csv(const std::string& text, const std::string& missing_marker) {
    return parse_csv(text, nullptr, missing_marker);
}

Dataset dataset_from_csv(const std::string& text, const std::vector<DatasetVariable>& schema,
                         const std::string& missing_marker) {
    return parse_csv(text, &schema, missing_marker);
}

Dataset read_dataset_csv(const std::string& path, const std::string& missing_marker) {
    try {
        return dataset_from_csv(read_file(path), missing_marker);
    } catch (const std::exception& e) {
        throw std::runtime_error(std::string(e.what()) + " (file '" + path + "')");
    }
}

Dataset read_dataset_csv(const std::string& path, const std::vector<DatasetVariable>& schema,
                         const std::string& missing_marker) {
    try {
        return dataset_from_csv(read_file(path), schema, missing_marker);
    } catch (const std::exception& e) {
        throw std::runtime_error(std::string(e.what()) + " (file '" + path + "')");
    }
}

}  // namespace structem

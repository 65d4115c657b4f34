#ifndef STRUCTEM_IO_HPP
#define STRUCTEM_IO_HPP

#include "structem/data.hpp"
#include "structem/model.hpp"

#include <string>

namespace structem {

// Network interchange format: a JSON document
//   {"variables":[{"name":..,"states":[..],"hidden":bool}],
//    "parents":{"child":["p1","p2"]},
//    "cpt":{"child":[[row...],...]}}
// CPT rows are ordered by mixed-radix parent-configuration index, entries by
// state index. The writer emits a canonical form whose decimal text
// round-trips bit-exactly through the reader.
std::string network_to_json(const Network& net);
Network network_from_json(const std::string& text);

Network read_network(const std::string& path);
void write_network(const std::string& path, const Network& net);

// Dataset CSV: header row of variable names, cells are state labels, missing
// cells are the marker (default "?").
std::string dataset_to_csv(const Dataset& d, const std::string& missing_marker = "?");
void write_dataset_csv(const std::string& path, const Dataset& d,
                       const std::string& missing_marker = "?");

// Without a schema, per-column state lists are inferred in order of first
// appearance. With a schema, labels map onto the given state lists and
// unknown labels are errors naming the variable and line.
Dataset dataset_from_csv(const std::string& text, const std::string& missing_marker = "?");
Dataset dataset_from_csv(const std::string& text, const std::vector<DatasetVariable>& schema,
                         const std::string& missing_marker = "?");
Dataset read_dataset_csv(const std::string& path, const std::string& missing_marker = "?");
Dataset read_dataset_csv(const std::string& path, const std::vector<DatasetVariable>& schema,
                         const std::string& missing_marker = "?");

// Observed variables of a network as a dataset schema.
std::vector<DatasetVariable> observed_schema(const Structure& s);

}  // namespace structem

#endif

#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace splitsplat::ply {

/// Scalar property types of the PLY format.
enum class Type { int8, uint8, int16, uint16, int32, uint32, float32, float64 };

Type type_from_name(const std::string& name);
std::string type_name(Type t);

struct Property {
    std::string name;
    Type type;
};

/// The `vertex` element of a PLY file, one column of doubles per property (exact for every type).
struct VertexTable {
    std::vector<Property> properties;
    std::map<std::string, std::vector<double>> columns;
    std::size_t count = 0;

    bool has(const std::string& name) const { return columns.count(name) > 0; }
    const std::vector<double>& column(const std::string& name) const;
};

/// Reads ascii or binary_little_endian files. Elements other than `vertex` must come after it or
/// be empty; list properties are rejected.
VertexTable read(const std::filesystem::path& path);

/// Writes a binary little-endian file; every column must hold `count` values representable in its type.
void write(const std::filesystem::path& path, const VertexTable& table);

}  // namespace splitsplat::ply

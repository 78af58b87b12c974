#include "splitsplat/ply.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "splitsplat/scene.hpp"

namespace splitsplat::ply {

static_assert(std::endian::native == std::endian::little, "binary PLY IO assumes a little-endian host");

Type type_from_name(const std::string& n) {
    if (n == "char" || n == "int8") return Type::int8;
    if (n == "uchar" || n == "uint8") return Type::uint8;
    if (n == "short" || n == "int16") return Type::int16;
    if (n == "ushort" || n == "uint16") return Type::uint16;
    if (n == "int" || n == "int32") return Type::int32;
    if (n == "uint" || n == "uint32") return Type::uint32;
    if (n == "float" || n == "float32") return Type::float32;
    if (n == "double" || n == "float64") return Type::float64;
    throw Error("ply: unknown property type '" + n + "'");
}

std::string type_name(Type t) {
    switch (t) {
        case Type::int8: return "char";
        case Type::uint8: return "uchar";
        case Type::int16: return "short";
        case Type::uint16: return "ushort";
        case Type::int32: return "int";
        case Type::uint32: return "uint";
        case Type::float32: return "float";
        case Type::float64: return "double";
    }
    return "?";
}

const std::vector<double>& VertexTable::column(const std::string& name) const {
    auto it = columns.find(name);
    if (it == columns.end()) throw Error("ply: missing vertex property '" + name + "'");
    return it->second;
}

namespace {

std::size_t type_size(Type t) {
    switch (t) {
        case Type::int8:
        case Type::uint8: return 1;
        case Type::int16:
        case Type::uint16: return 2;
        case Type::int32:
        case Type::uint32:
        case Type::float32: return 4;
        case Type::float64: return 8;
    }
    return 0;
}

template <typename T>
double load_as(const char* p) {
    T v;
    std::memcpy(&v, p, sizeof v);
    return static_cast<double>(v);
}

double decode(Type t, const char* p) {
    switch (t) {
        case Type::int8: return load_as<std::int8_t>(p);
        case Type::uint8: return load_as<std::uint8_t>(p);
        case Type::int16: return load_as<std::int16_t>(p);
        case Type::uint16: return load_as<std::uint16_t>(p);
        case Type::int32: return load_as<std::int32_t>(p);
        case Type::uint32: return load_as<std::uint32_t>(p);
        case Type::float32: return load_as<float>(p);
        case Type::float64: return load_as<double>(p);
    }
    return 0.0;
}

template <typename T>
void store_as(std::string& out, double v) {
    const T x = static_cast<T>(v);
    if constexpr (std::is_integral_v<T>) {
        if (static_cast<double>(x) != v) throw Error("ply: value not representable in integer property");
    }
    char buf[sizeof(T)];
    std::memcpy(buf, &x, sizeof x);
    out.append(buf, sizeof buf);
}

void encode(Type t, double v, std::string& out) {
    switch (t) {
        case Type::int8: store_as<std::int8_t>(out, v); break;
        case Type::uint8: store_as<std::uint8_t>(out, v); break;
        case Type::int16: store_as<std::int16_t>(out, v); break;
        case Type::uint16: store_as<std::uint16_t>(out, v); break;
        case Type::int32: store_as<std::int32_t>(out, v); break;
        case Type::uint32: store_as<std::uint32_t>(out, v); break;
        case Type::float32: store_as<float>(out, v); break;
        case Type::float64: store_as<double>(out, v); break;
    }
}

struct Element {
    std::string name;
    std::size_t count = 0;
    std::vector<Property> props;
};

}  // namespace

VertexTable read(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("ply: cannot open " + path.string());
    std::string line;
    if (!std::getline(in, line) || line.substr(0, 3) != "ply") throw Error("ply: bad magic in " + path.string());
    std::string format;
    std::vector<Element> elements;
    for (;;) {
        if (!std::getline(in, line)) throw Error("ply: truncated header in " + path.string());
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::istringstream ls(line);
        std::string kw;
        ls >> kw;
        if (kw == "end_header") break;
        if (kw == "format") {
            std::string version;
            ls >> format >> version;
        } else if (kw == "element") {
            Element e;
            ls >> e.name >> e.count;
            if (!ls) throw Error("ply: malformed element line '" + line + "'");
            elements.push_back(e);
        } else if (kw == "property") {
            if (elements.empty()) throw Error("ply: property before element");
            std::string type, name;
            ls >> type;
            if (type == "list") throw Error("ply: list properties are not supported");
            ls >> name;
            if (!ls) throw Error("ply: malformed property line '" + line + "'");
            elements.back().props.push_back({name, type_from_name(type)});
        } else if (kw == "comment" || kw == "obj_info" || kw.empty()) {
            continue;
        } else {
            throw Error("ply: unexpected header keyword '" + kw + "'");
        }
    }
    if (format != "ascii" && format != "binary_little_endian")
        throw Error("ply: unsupported format '" + format + "'");

    VertexTable table;
    for (const auto& e : elements) {
        if (e.name != "vertex") {
            if (e.count > 0) throw Error("ply: non-empty element '" + e.name + "' before 'vertex' is not supported");
            continue;
        }
        table.properties = e.props;
        table.count = e.count;
        for (const auto& p : e.props) {
            if (table.columns.count(p.name)) throw Error("ply: duplicate property '" + p.name + "'");
            table.columns[p.name].resize(e.count);
        }
        if (format == "ascii") {
            for (std::size_t i = 0; i < e.count; ++i)
                for (const auto& p : e.props) {
                    std::string tok;
                    if (!(in >> tok)) throw Error("ply: truncated vertex data in " + path.string());
                    try {
                        table.columns[p.name][i] = std::stod(tok);
                    } catch (const std::exception&) {
                        throw Error("ply: bad number '" + tok + "'");
                    }
                }
        } else {
            std::size_t stride = 0;
            for (const auto& p : e.props) stride += type_size(p.type);
            std::string buf(stride * e.count, '\0');
            in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
            if (static_cast<std::size_t>(in.gcount()) != buf.size())
                throw Error("ply: truncated vertex data in " + path.string());
            std::vector<std::vector<double>*> cols;
            for (const auto& p : e.props) cols.push_back(&table.columns[p.name]);
            const char* ptr = buf.data();
            for (std::size_t i = 0; i < e.count; ++i)
                for (std::size_t k = 0; k < e.props.size(); ++k) {
                    (*cols[k])[i] = decode(e.props[k].type, ptr);
                    ptr += type_size(e.props[k].type);
                }
        }
        return table;
    }
    throw Error("ply: no vertex element in " + path.string());
}

void write(const std::filesystem::path& path, const VertexTable& table) {
    std::vector<const std::vector<double>*> cols;
    for (const auto& p : table.properties) {
        const auto& c = table.column(p.name);
        if (c.size() != table.count) throw Error("ply: column '" + p.name + "' has the wrong length");
        cols.push_back(&c);
    }
    std::string out = "ply\nformat binary_little_endian 1.0\nelement vertex " + std::to_string(table.count) + "\n";
    for (const auto& p : table.properties) out += "property " + type_name(p.type) + " " + p.name + "\n";
    out += "end_header\n";
    for (std::size_t i = 0; i < table.count; ++i)
        for (std::size_t k = 0; k < cols.size(); ++k) encode(table.properties[k].type, (*cols[k])[i], out);
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error("ply: cannot write " + path.string());
    f.write(out.data(), static_cast<std::streamsize>(out.size()));
    if (!f) throw Error("ply: write failed for " + path.string());
}

}  // namespace splitsplat::ply

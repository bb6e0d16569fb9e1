#pragma once

// Flat binary field files (small header + raw host-order doubles), named field
// bundles for checkpoints and CSV helpers.

#include <array>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "lowmach/error.hpp"
#include "lowmach/grid.hpp"

namespace lowmach {

inline constexpr std::array<char, 8> kFieldMagic{'L', 'M', 'F', 'I', 'E', 'L', 'D', '1'};

namespace detail {

template <class T>
void put(std::ostream& os, const T& v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T get(std::istream& is, const std::string& where) {
    T v{};
    if (!is.read(reinterpret_cast<char*>(&v), sizeof(T))) throw ConfigError("truncated field data in " + where);
    return v;
}

inline void write_grid(std::ostream& os, const Grid& g) {
    put<std::int32_t>(os, g.dim);
    put<std::int32_t>(os, g.nx);
    put<std::int32_t>(os, g.ny);
    put(os, g.x0);
    put(os, g.y0);
    put(os, g.lx);
    put(os, g.ly);
    put<std::uint8_t>(os, g.boundary == Boundary::Periodic ? 1 : 0);
}

inline Grid read_grid(std::istream& is, const std::string& where) {
    Grid g;
    g.dim = get<std::int32_t>(is, where);
    g.nx = get<std::int32_t>(is, where);
    g.ny = get<std::int32_t>(is, where);
    g.x0 = get<double>(is, where);
    g.y0 = get<double>(is, where);
    g.lx = get<double>(is, where);
    g.ly = get<double>(is, where);
    g.boundary = get<std::uint8_t>(is, where) ? Boundary::Periodic : Boundary::NeumannBox;
    g.validate();
    return g;
}

}  // namespace detail

/// Components of one field on a grid: 1 for scalars, 2 for vectors.
struct FieldRecord {
    Grid grid;
    std::vector<std::vector<double>> components;
};

inline FieldRecord to_record(const ScalarField& f) { return {f.grid, {f.values}}; }
inline FieldRecord to_record(const VectorField& f) { return {f.grid, {f.x, f.y}}; }

inline void write_field(std::ostream& os, const FieldRecord& r) {
    os.write(kFieldMagic.data(), kFieldMagic.size());
    detail::write_grid(os, r.grid);
    detail::put<std::uint32_t>(os, std::uint32_t(r.components.size()));
    for (const auto& c : r.components) {
        if (c.size() != r.grid.size()) throw PreconditionError("component size does not match grid");
        os.write(reinterpret_cast<const char*>(c.data()), std::streamsize(c.size() * sizeof(double)));
    }
}

inline FieldRecord read_field(std::istream& is, const std::string& where = "stream") {
    std::array<char, 8> magic{};
    if (!is.read(magic.data(), magic.size()) || magic != kFieldMagic) throw ConfigError("not a field file: " + where);
    FieldRecord r{detail::read_grid(is, where), {}};
    const auto n = detail::get<std::uint32_t>(is, where);
    if (n == 0 || n > 16) throw ConfigError("bad component count in " + where);
    r.components.assign(n, std::vector<double>(r.grid.size()));
    for (auto& c : r.components)
        if (!is.read(reinterpret_cast<char*>(c.data()), std::streamsize(c.size() * sizeof(double))))
            throw ConfigError("truncated field data in " + where);
    return r;
}

inline ScalarField scalar_from_record(const FieldRecord& r) {
    if (r.components.size() != 1) throw ConfigError("expected a scalar field");
    return ScalarField(r.grid, r.components[0]);
}

inline VectorField vector_from_record(const FieldRecord& r) {
    if (r.components.size() != 2) throw ConfigError("expected a vector field");
    VectorField v(r.grid);
    v.x = r.components[0];
    v.y = r.components[1];
    return v;
}

inline void save_field(const std::filesystem::path& p, const FieldRecord& r) {
    std::ofstream os(p, std::ios::binary);
    if (!os) throw ConfigError("cannot open " + p.string() + " for writing");
    write_field(os, r);
}

inline FieldRecord load_field(const std::filesystem::path& p) {
    std::ifstream is(p, std::ios::binary);
    if (!is) throw ConfigError("cannot open " + p.string());
    return read_field(is, p.string());
}

/// Named fields written as <dir>/<name>.bin plus an index file.
struct FieldBundle {
    double time = 0.0;
    std::map<std::string, FieldRecord> fields;

    void add(const std::string& name, const ScalarField& f) { fields[name] = to_record(f); }
    void add(const std::string& name, const VectorField& f) { fields[name] = to_record(f); }
};

inline void save_bundle(const std::filesystem::path& dir, const FieldBundle& b) {
    std::filesystem::create_directories(dir);
    std::ofstream idx(dir / "index.txt");
    if (!idx) throw ConfigError("cannot write bundle index in " + dir.string());
    idx.precision(17);
    idx << "time " << b.time << '\n';
    for (const auto& [name, rec] : b.fields) {
        save_field(dir / (name + ".bin"), rec);
        idx << "field " << name << '\n';
    }
}

inline FieldBundle load_bundle(const std::filesystem::path& dir) {
    std::ifstream idx(dir / "index.txt");
    if (!idx) throw ConfigError("missing bundle index in " + dir.string());
    FieldBundle b;
    std::string key, value;
    while (idx >> key >> value) {
        if (key == "time") b.time = std::stod(value);
        else if (key == "field") b.fields[value] = load_field(dir / (value + ".bin"));
        else throw ConfigError("bad bundle index entry '" + key + "'");
    }
    return b;
}

/// x, y, value columns, one row per cell.
inline void write_csv(std::ostream& os, const ScalarField& f) {
    os.precision(12);
    os << "x,y,value\n";
    for (int j = 0; j < f.grid.ny; ++j)
        for (int i = 0; i < f.grid.nx; ++i) os << f.grid.x(i) << ',' << f.grid.y(j) << ',' << f(i, j) << '\n';
}

inline void write_csv(std::ostream& os, const VectorField& f) {
    os.precision(12);
    os << "x,y,vx,vy\n";
    for (int j = 0; j < f.grid.ny; ++j)
        for (int i = 0; i < f.grid.nx; ++i) {
            const auto k = f.grid.index(i, j);
            os << f.grid.x(i) << ',' << f.grid.y(j) << ',' << f.x[k] << ',' << f.y[k] << '\n';
        }
}

/// Generic table: header row and rows of numbers.
struct CsvTable {
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;

    void add_row(std::vector<double> r) {
        if (r.size() != columns.size()) throw PreconditionError("row width does not match header");
        rows.push_back(std::move(r));
    }
};

inline void write_csv(std::ostream& os, const CsvTable& t) {
    os.precision(12);
    for (std::size_t c = 0; c < t.columns.size(); ++c) os << (c ? "," : "") << t.columns[c];
    os << '\n';
    for (const auto& r : t.rows) {
        for (std::size_t c = 0; c < r.size(); ++c) os << (c ? "," : "") << r[c];
        os << '\n';
    }
}

}  // namespace lowmach

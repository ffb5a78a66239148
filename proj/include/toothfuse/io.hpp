#pragma once

#include "toothfuse/core.hpp"

#include <algorithm>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace toothfuse {

namespace detail {

inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline std::string ascii_lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

// Normals from external files may be unnormalized; rescale them, and drop
// the whole attribute if any is degenerate.
inline void finalize_normals(TriMesh& m) {
    for (Vec3& n : m.normals) {
        double len = n.norm();
        if (!(len > 1e-12) || !n.allFinite()) {
            m.normals.clear();
            return;
        }
        n /= len;
    }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// OBJ

inline void write_obj(const std::string& path, const TriMesh& m) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path);
    const bool vn = m.has_normals();
    for (const Vec3& v : m.vertices)
        out << "v " << detail::format_double(v[0]) << ' ' << detail::format_double(v[1])
            << ' ' << detail::format_double(v[2]) << '\n';
    if (vn)
        for (const Vec3& n : m.normals)
            out << "vn " << detail::format_double(n[0]) << ' '
                << detail::format_double(n[1]) << ' ' << detail::format_double(n[2])
                << '\n';
    for (const Vec3i& t : m.triangles) {
        if (vn)
            out << "f " << t[0] + 1 << "//" << t[0] + 1 << ' ' << t[1] + 1 << "//"
                << t[1] + 1 << ' ' << t[2] + 1 << "//" << t[2] + 1 << '\n';
        else
            out << "f " << t[0] + 1 << ' ' << t[1] + 1 << ' ' << t[2] + 1 << '\n';
    }
    if (!out) throw IoError("write failed: " + path);
}

inline TriMesh read_obj(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open: " + path);
    TriMesh m;
    std::vector<Vec3> vn_list;
    std::vector<int> corner_normals;  // normal index per vertex, -1 unknown
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::istringstream ls(line);
        std::string tag;
        if (!(ls >> tag) || tag.empty() || tag[0] == '#') continue;
        if (tag == "v") {
            Vec3 v;
            if (!(ls >> v[0] >> v[1] >> v[2]))
                throw IoError(path + ":" + std::to_string(line_no) + ": bad vertex");
            m.vertices.push_back(v);
        } else if (tag == "vn") {
            Vec3 n;
            if (!(ls >> n[0] >> n[1] >> n[2]))
                throw IoError(path + ":" + std::to_string(line_no) + ": bad normal");
            vn_list.push_back(n);
        } else if (tag == "f") {
            std::vector<int> vi, ni;
            std::string corner;
            while (ls >> corner) {
                int v = 0, n = -1;
                std::size_t s1 = corner.find('/');
                v = std::stoi(corner.substr(0, s1));
                if (s1 != std::string::npos) {
                    std::size_t s2 = corner.find('/', s1 + 1);
                    if (s2 != std::string::npos && s2 + 1 < corner.size())
                        n = std::stoi(corner.substr(s2 + 1));
                }
                // negative indices are relative to the current end
                int vc = static_cast<int>(m.vertices.size());
                v = v > 0 ? v - 1 : vc + v;
                if (v < 0 || v >= vc)
                    throw IoError(path + ":" + std::to_string(line_no) +
                                  ": face index out of range");
                if (n != -1) {
                    int nc = static_cast<int>(vn_list.size());
                    n = n > 0 ? n - 1 : nc + n;
                    if (n < 0 || n >= nc)
                        throw IoError(path + ":" + std::to_string(line_no) +
                                      ": normal index out of range");
                }
                vi.push_back(v);
                ni.push_back(n);
            }
            if (vi.size() < 3)
                throw IoError(path + ":" + std::to_string(line_no) + ": face with <3 corners");
            corner_normals.resize(m.vertices.size(), -1);
            for (std::size_t c = 0; c < vi.size(); ++c)
                if (ni[c] != -1) corner_normals[vi[c]] = ni[c];
            for (std::size_t c = 2; c < vi.size(); ++c)
                m.triangles.emplace_back(vi[0], vi[c - 1], vi[c]);
        }
        // other tags (vt, o, g, s, usemtl, mtllib) are ignored
    }
    // attach normals only when every vertex received exactly one
    if (!vn_list.empty()) {
        corner_normals.resize(m.vertices.size(), -1);
        bool full = !m.vertices.empty() &&
                    std::none_of(corner_normals.begin(), corner_normals.end(),
                                 [](int n) { return n < 0; });
        if (full) {
            m.normals.reserve(m.vertices.size());
            for (int n : corner_normals) m.normals.push_back(vn_list[n]);
        }
    }
    detail::finalize_normals(m);
    m.validate();
    return m;
}

// ---------------------------------------------------------------------------
// PLY

namespace detail {

enum class PlyType { i8, u8, i16, u16, i32, u32, f32, f64 };

inline PlyType ply_type(const std::string& name) {
    if (name == "char" || name == "int8") return PlyType::i8;
    if (name == "uchar" || name == "uint8") return PlyType::u8;
    if (name == "short" || name == "int16") return PlyType::i16;
    if (name == "ushort" || name == "uint16") return PlyType::u16;
    if (name == "int" || name == "int32") return PlyType::i32;
    if (name == "uint" || name == "uint32") return PlyType::u32;
    if (name == "float" || name == "float32") return PlyType::f32;
    if (name == "double" || name == "float64") return PlyType::f64;
    throw IoError("ply: unknown type " + name);
}

inline std::size_t ply_size(PlyType t) {
    switch (t) {
        case PlyType::i8:
        case PlyType::u8: return 1;
        case PlyType::i16:
        case PlyType::u16: return 2;
        case PlyType::i32:
        case PlyType::u32:
        case PlyType::f32: return 4;
        case PlyType::f64: return 8;
    }
    return 0;
}

inline double ply_read_binary(std::istream& in, PlyType t) {
    unsigned char buf[8];
    in.read(reinterpret_cast<char*>(buf), static_cast<std::streamsize>(ply_size(t)));
    if (!in) throw IoError("ply: unexpected end of binary data");
    auto as = [&](auto v) {
        std::memcpy(&v, buf, sizeof(v));
        return static_cast<double>(v);
    };
    switch (t) {
        case PlyType::i8: return as(std::int8_t{});
        case PlyType::u8: return as(std::uint8_t{});
        case PlyType::i16: return as(std::int16_t{});
        case PlyType::u16: return as(std::uint16_t{});
        case PlyType::i32: return as(std::int32_t{});
        case PlyType::u32: return as(std::uint32_t{});
        case PlyType::f32: return as(float{});
        case PlyType::f64: return as(double{});
    }
    return 0.0;
}

inline double ply_read_ascii(std::istream& in, PlyType) {
    double v;
    if (!(in >> v)) throw IoError("ply: unexpected end of ascii data");
    return v;
}

struct PlyProperty {
    std::string name;
    PlyType type = PlyType::f32;
    bool is_list = false;
    PlyType count_type = PlyType::u8;
};

struct PlyElement {
    std::string name;
    std::size_t count = 0;
    std::vector<PlyProperty> properties;
};

}  // namespace detail

inline void write_ply(const std::string& path, const TriMesh& m, bool binary = true) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path);
    const bool vn = m.has_normals();
    const bool vc = m.has_colors();
    out << "ply\n"
        << (binary ? "format binary_little_endian 1.0\n" : "format ascii 1.0\n")
        << "element vertex " << m.vertices.size() << '\n'
        << "property double x\nproperty double y\nproperty double z\n";
    if (vn) out << "property double nx\nproperty double ny\nproperty double nz\n";
    if (vc) out << "property uchar red\nproperty uchar green\nproperty uchar blue\n";
    out << "element face " << m.triangles.size() << '\n'
        << "property list uchar int vertex_indices\n"
        << "end_header\n";

    auto to_byte = [](double v) {
        return static_cast<unsigned char>(
            std::clamp(std::lround(v * 255.0), 0L, 255L));
    };
    if (binary) {
        auto put = [&out](const void* p, std::size_t n) {
            out.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
        };
        for (std::size_t i = 0; i < m.vertices.size(); ++i) {
            double xyz[3] = {m.vertices[i][0], m.vertices[i][1], m.vertices[i][2]};
            put(xyz, sizeof(xyz));
            if (vn) {
                double nrm[3] = {m.normals[i][0], m.normals[i][1], m.normals[i][2]};
                put(nrm, sizeof(nrm));
            }
            if (vc) {
                unsigned char rgb[3] = {to_byte(m.colors[i][0]), to_byte(m.colors[i][1]),
                                        to_byte(m.colors[i][2])};
                put(rgb, sizeof(rgb));
            }
        }
        for (const Vec3i& t : m.triangles) {
            unsigned char three = 3;
            std::int32_t idx[3] = {t[0], t[1], t[2]};
            put(&three, 1);
            put(idx, sizeof(idx));
        }
    } else {
        for (std::size_t i = 0; i < m.vertices.size(); ++i) {
            out << detail::format_double(m.vertices[i][0]) << ' '
                << detail::format_double(m.vertices[i][1]) << ' '
                << detail::format_double(m.vertices[i][2]);
            if (vn)
                out << ' ' << detail::format_double(m.normals[i][0]) << ' '
                    << detail::format_double(m.normals[i][1]) << ' '
                    << detail::format_double(m.normals[i][2]);
            if (vc)
                out << ' ' << int(to_byte(m.colors[i][0])) << ' '
                    << int(to_byte(m.colors[i][1])) << ' '
                    << int(to_byte(m.colors[i][2]));
            out << '\n';
        }
        for (const Vec3i& t : m.triangles)
            out << "3 " << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
    }
    if (!out) throw IoError("write failed: " + path);
}

inline TriMesh read_ply(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open: " + path);
    std::string line;
    if (!std::getline(in, line)) throw IoError("ply: empty file: " + path);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "ply") throw IoError("ply: missing magic: " + path);

    bool binary = false;
    std::vector<detail::PlyElement> elements;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::istringstream ls(line);
        std::string tag;
        ls >> tag;
        if (tag == "comment" || tag == "obj_info" || tag.empty()) continue;
        if (tag == "format") {
            std::string fmt;
            ls >> fmt;
            if (fmt == "ascii") binary = false;
            else if (fmt == "binary_little_endian") binary = true;
            else throw IoError("ply: unsupported format " + fmt);
        } else if (tag == "element") {
            detail::PlyElement e;
            ls >> e.name >> e.count;
            elements.push_back(e);
        } else if (tag == "property") {
            if (elements.empty()) throw IoError("ply: property before element");
            detail::PlyProperty p;
            std::string t1;
            ls >> t1;
            if (t1 == "list") {
                std::string ct, vt;
                ls >> ct >> vt >> p.name;
                p.is_list = true;
                p.count_type = detail::ply_type(ct);
                p.type = detail::ply_type(vt);
            } else {
                p.type = detail::ply_type(t1);
                ls >> p.name;
            }
            elements.back().properties.push_back(p);
        } else if (tag == "end_header") {
            break;
        } else {
            throw IoError("ply: unexpected header line: " + line);
        }
    }

    TriMesh m;
    auto read_scalar = [&](detail::PlyType t) {
        return binary ? detail::ply_read_binary(in, t) : detail::ply_read_ascii(in, t);
    };
    for (const detail::PlyElement& e : elements) {
        if (e.name == "vertex") {
            int ix = -1, iy = -1, iz = -1, inx = -1, iny = -1, inz = -1;
            int ir = -1, ig = -1, ib = -1;
            for (std::size_t p = 0; p < e.properties.size(); ++p) {
                const std::string n = detail::ascii_lower(e.properties[p].name);
                int pi = static_cast<int>(p);
                if (n == "x") ix = pi;
                else if (n == "y") iy = pi;
                else if (n == "z") iz = pi;
                else if (n == "nx") inx = pi;
                else if (n == "ny") iny = pi;
                else if (n == "nz") inz = pi;
                else if (n == "red" || n == "r") ir = pi;
                else if (n == "green" || n == "g") ig = pi;
                else if (n == "blue" || n == "b") ib = pi;
            }
            if (ix < 0 || iy < 0 || iz < 0)
                throw IoError("ply: vertex element lacks x/y/z: " + path);
            const bool has_n = inx >= 0 && iny >= 0 && inz >= 0;
            const bool has_c = ir >= 0 && ig >= 0 && ib >= 0;
            m.vertices.reserve(e.count);
            std::vector<double> vals(e.properties.size());
            for (std::size_t i = 0; i < e.count; ++i) {
                for (std::size_t p = 0; p < e.properties.size(); ++p) {
                    const detail::PlyProperty& pr = e.properties[p];
                    if (pr.is_list) {
                        std::size_t cnt =
                            static_cast<std::size_t>(read_scalar(pr.count_type));
                        for (std::size_t j = 0; j < cnt; ++j) read_scalar(pr.type);
                        vals[p] = 0.0;
                    } else {
                        vals[p] = read_scalar(pr.type);
                    }
                }
                m.vertices.emplace_back(vals[ix], vals[iy], vals[iz]);
                if (has_n) m.normals.emplace_back(vals[inx], vals[iny], vals[inz]);
                if (has_c)
                    m.colors.emplace_back(vals[ir] / 255.0, vals[ig] / 255.0,
                                          vals[ib] / 255.0);
            }
        } else if (e.name == "face") {
            int ilist = -1;
            for (std::size_t p = 0; p < e.properties.size(); ++p) {
                const std::string n = detail::ascii_lower(e.properties[p].name);
                if (e.properties[p].is_list &&
                    (n == "vertex_indices" || n == "vertex_index"))
                    ilist = static_cast<int>(p);
            }
            if (ilist < 0) throw IoError("ply: face element lacks vertex_indices: " + path);
            m.triangles.reserve(e.count);
            for (std::size_t i = 0; i < e.count; ++i) {
                for (std::size_t p = 0; p < e.properties.size(); ++p) {
                    const detail::PlyProperty& pr = e.properties[p];
                    if (!pr.is_list) {
                        read_scalar(pr.type);
                        continue;
                    }
                    std::size_t cnt = static_cast<std::size_t>(read_scalar(pr.count_type));
                    std::vector<int> idx(cnt);
                    for (std::size_t j = 0; j < cnt; ++j)
                        idx[j] = static_cast<int>(read_scalar(pr.type));
                    if (static_cast<int>(p) == ilist) {
                        if (cnt < 3) throw IoError("ply: face with <3 corners: " + path);
                        for (std::size_t c = 2; c < cnt; ++c)
                            m.triangles.emplace_back(idx[0], idx[c - 1], idx[c]);
                    }
                }
            }
        } else {
            // skip unknown elements property by property
            for (std::size_t i = 0; i < e.count; ++i)
                for (const detail::PlyProperty& pr : e.properties) {
                    if (pr.is_list) {
                        std::size_t cnt =
                            static_cast<std::size_t>(read_scalar(pr.count_type));
                        for (std::size_t j = 0; j < cnt; ++j) read_scalar(pr.type);
                    } else {
                        read_scalar(pr.type);
                    }
                }
        }
    }
    detail::finalize_normals(m);
    m.validate();
    return m;
}

// Dispatch by extension (.ply or .obj).
inline TriMesh read_mesh(const std::string& path) {
    std::string lower = detail::ascii_lower(path);
    if (lower.size() >= 4 && lower.compare(lower.size() - 4, 4, ".ply") == 0)
        return read_ply(path);
    if (lower.size() >= 4 && lower.compare(lower.size() - 4, 4, ".obj") == 0)
        return read_obj(path);
    throw IoError("unsupported mesh extension (want .ply or .obj): " + path);
}

inline void write_mesh(const std::string& path, const TriMesh& m, bool binary = true) {
    std::string lower = detail::ascii_lower(path);
    if (lower.size() >= 4 && lower.compare(lower.size() - 4, 4, ".ply") == 0)
        return write_ply(path, m, binary);
    if (lower.size() >= 4 && lower.compare(lower.size() - 4, 4, ".obj") == 0)
        return write_obj(path, m);
    throw IoError("unsupported mesh extension (want .ply or .obj): " + path);
}

}  // namespace toothfuse

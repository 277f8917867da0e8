#pragma once
#include <bit>
#include <cstdint>
#include <cstring>

#include "atomics.hpp"

namespace ovtl {

static_assert(std::endian::native == std::endian::little, "field files assume a little-endian host");

constexpr std::uint16_t field_format_version = 1;

struct FieldHeader {
    std::uint32_t d = 0, N = 0, n = 0, j_count = 0;
    size_t entries() const
    {
        size_t pts = 1;
        for (std::uint32_t i = 0; i < d; ++i) pts *= N;
        return pts * n * n * std::max<std::uint32_t>(j_count, 1);
    }
};

namespace detail {

template <class T>
void put(std::string& out, T v)
{
    char b[sizeof(T)];
    std::memcpy(b, &v, sizeof(T));
    out.append(b, sizeof(T));
}

template <class T>
T get(const std::string& in, size_t& pos)
{
    if (pos + sizeof(T) > in.size()) throw FormatError("truncated field record");
    T v;
    std::memcpy(&v, in.data() + pos, sizeof(T));
    pos += sizeof(T);
    return v;
}

inline void put_header(std::string& out, const FieldHeader& h)
{
    out.append("OVTL", 4);
    put(out, field_format_version);
    put(out, h.d);
    put(out, h.N);
    put(out, h.n);
    put(out, h.j_count);
}

inline void put_data(std::string& out, const std::vector<cplx>& v)
{
    out.append(reinterpret_cast<const char*>(v.data()), v.size() * sizeof(cplx));
}

inline std::string read_file(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot read " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_file(const std::string& path, const std::string& bytes)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) throw FormatError("cannot write " + path);
    out.write(bytes.data(), std::streamsize(bytes.size()));
    if (!out) throw FormatError("cannot write " + path);
}

} // namespace detail

inline std::string encode_field(const OperatorField& f)
{
    std::string out;
    detail::put_header(out, {std::uint32_t(f.grid().d), std::uint32_t(f.grid().N), std::uint32_t(f.n()), 0});
    detail::put_data(out, f.raw());
    return out;
}

inline std::string encode_strip(const StripField& F)
{
    std::string out;
    detail::put_header(out, {std::uint32_t(F.grid().d), std::uint32_t(F.grid().N), std::uint32_t(F.n()), std::uint32_t(F.j_max())});
    for (int j = 1; j <= F.j_max(); ++j) detail::put_data(out, F.level(j).raw());
    return out;
}

// one record starting at pos; pos advances past it
inline FieldHeader decode_header(const std::string& in, size_t& pos)
{
    if (pos + 4 > in.size() || in.compare(pos, 4, "OVTL") != 0) throw FormatError("bad field magic");
    pos += 4;
    auto v = detail::get<std::uint16_t>(in, pos);
    if (v != field_format_version) throw FormatError("unsupported field format version " + std::to_string(v));
    FieldHeader h;
    h.d = detail::get<std::uint32_t>(in, pos);
    h.N = detail::get<std::uint32_t>(in, pos);
    h.n = detail::get<std::uint32_t>(in, pos);
    h.j_count = detail::get<std::uint32_t>(in, pos);
    if (h.d < 1 || h.d > 3 || h.n < 1) throw FormatError("bad field header");
    if (pos + h.entries() * sizeof(cplx) > in.size()) throw FormatError("truncated field data");
    return h;
}

inline void decode_data(const std::string& in, size_t& pos, std::vector<cplx>& out)
{
    std::memcpy(out.data(), in.data() + pos, out.size() * sizeof(cplx));
    pos += out.size() * sizeof(cplx);
}

inline OperatorField decode_field(const std::string& in, size_t& pos)
{
    FieldHeader h = decode_header(in, pos);
    if (h.j_count != 0) throw FormatError("record holds a strip field");
    OperatorField f(Grid(int(h.d), long(h.N)), int(h.n));
    decode_data(in, pos, f.raw());
    return f;
}

inline StripField decode_strip(const std::string& in, size_t& pos)
{
    FieldHeader h = decode_header(in, pos);
    if (h.j_count == 0) throw FormatError("record holds a plain field");
    StripField F(Grid(int(h.d), long(h.N)), int(h.n), int(h.j_count));
    for (int j = 1; j <= F.j_max(); ++j) decode_data(in, pos, F.level(j).raw());
    return F;
}

inline void write_field(const std::string& path, const OperatorField& f) { detail::write_file(path, encode_field(f)); }
inline void write_strip(const std::string& path, const StripField& F) { detail::write_file(path, encode_strip(F)); }

inline OperatorField read_field(const std::string& path)
{
    std::string in = detail::read_file(path);
    size_t pos = 0;
    OperatorField f = decode_field(in, pos);
    if (pos != in.size()) throw FormatError("trailing bytes in " + path);
    return f;
}

inline StripField read_strip(const std::string& path)
{
    std::string in = detail::read_file(path);
    size_t pos = 0;
    StripField F = decode_strip(in, pos);
    if (pos != in.size()) throw FormatError("trailing bytes in " + path);
    return F;
}

// ---------------------------------------------------------------- decomposition manifest

// a local box is stored as a plain field record on its own ext^d lattice; the manifest holds the origin
inline std::string encode_local(const LocalField& a)
{
    std::string out;
    detail::put_header(out, {std::uint32_t(a.grid().d), std::uint32_t(a.ext()), std::uint32_t(a.n()), 0});
    detail::put_data(out, a.raw());
    return out;
}

inline LocalField decode_local(const std::string& in, size_t& pos, const Grid& g, const IVec& origin)
{
    FieldHeader h = decode_header(in, pos);
    if (int(h.d) != g.d || h.j_count != 0 || long(h.N) > g.N) throw FormatError("atom record does not fit the grid");
    LocalField a(g, int(h.n), origin, long(h.N));
    decode_data(in, pos, a.raw());
    return a;
}

inline std::string ivec_text(const IVec& v, int d)
{
    std::string s;
    for (int i = 0; i < d; ++i) s += (i ? " " : "") + std::to_string(v[i]);
    return s;
}

inline IVec parse_ivec(const std::string& s, int d)
{
    IVec v{0, 0, 0};
    std::istringstream is(s);
    for (int i = 0; i < d; ++i)
        if (!(is >> v[i])) throw FormatError("bad index vector: " + s);
    return v;
}

struct Manifest {
    Document doc;
    std::string blob;
};

inline Manifest encode_decomposition(const AtomicDecomposition& D, unsigned long long seed = 0)
{
    Manifest m;
    Section& top = m.doc.add("decomposition");
    top.set("target", D.target);
    top.set("grid.d", D.grid.d);
    top.set("grid.N", D.grid.N);
    top.set("matrix.n", D.n);
    top.set("alpha", D.alpha);
    top.set("K", D.K);
    top.set("L", D.L);
    top.set("calderon.m", D.m);
    top.set("seed", seed);
    top.set("atoms", long(D.atoms.size()));
    top.set("mass", D.mass);
    top.set("source_norm", D.source_norm);
    top.set("mass_ratio", D.mass_ratio());
    top.set("tent_mass_ratio", D.tent_mass_ratio);
    top.set("residual", D.residual);
    top.set("all_valid", D.all_valid());
    for (size_t i = 0; i < D.atoms.size(); ++i) {
        const AtomEntry& a = D.atoms[i];
        Section& s = m.doc.add("atom." + std::to_string(i));
        s.set("kind", a.kind);
        s.set("cube.mu", a.cube().mu);
        s.set("cube.l", ivec_text(a.cube().l, D.grid.d));
        s.set("coef.re", a.coef.real());
        s.set("coef.im", a.coef.imag());
        s.set("multiple", a.multiple);
        s.set("valid", a.report.pass());
        s.set("min_slack", a.report.clauses.empty() ? 0.0 : a.report.min_slack());
        for (auto& c : a.report.clauses) s.set("slack." + c.name, c.slack());
        s.set("origin", ivec_text(a.data().origin(), D.grid.d));
        s.set("offset", (unsigned long long)m.blob.size());
        m.blob += encode_local(a.data());
    }
    return m;
}

inline const std::string& need(const Section& s, const std::string& k)
{
    const std::string* v = s.find(k);
    if (!v) throw FormatError("missing key " + k + " in [" + s.name + "]");
    return *v;
}

// sum of coefficient times atom data
inline OperatorField reconstruct_manifest(const Document& doc, const std::string& blob)
{
    const Section* top = doc.find("decomposition");
    if (!top) throw FormatError("manifest has no [decomposition] section");
    Grid g(int(std::stol(need(*top, "grid.d"))), std::stol(need(*top, "grid.N")));
    OperatorField f(g, int(std::stol(need(*top, "matrix.n"))));
    long count = std::stol(need(*top, "atoms"));
    for (long i = 0; i < count; ++i) {
        const Section* s = doc.find("atom." + std::to_string(i));
        if (!s) throw FormatError("missing [atom." + std::to_string(i) + "]");
        size_t pos = std::stoull(need(*s, "offset"));
        LocalField a = decode_local(blob, pos, g, parse_ivec(need(*s, "origin"), g.d));
        a.add_to(f, cplx(parse_double(need(*s, "coef.re")), parse_double(need(*s, "coef.im"))));
    }
    return f;
}

inline void write_manifest(const std::string& path, const Manifest& m)
{
    m.doc.save(path);
    detail::write_file(path + ".blob", m.blob);
}

inline OperatorField reconstruct_from(const std::string& manifest_path)
{
    return reconstruct_manifest(Document::load(manifest_path), detail::read_file(manifest_path + ".blob"));
}

} // namespace ovtl

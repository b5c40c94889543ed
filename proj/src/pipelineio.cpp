#include "tac3d/pipelineio.hpp"

#include <Eigen/Geometry>
#include <array>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>

namespace tac3d::pipelineio {

namespace {

constexpr char kMagic[8] = {'T', 'A', 'C', '3', 'D', 'H', '1', '\0'};
constexpr std::uint32_t kDtypeF64 = 1;

std::array<std::uint32_t, 256> make_crc_table() {
    std::array<std::uint32_t, 256> table{};
    for (std::uint32_t i = 0; i < 256; ++i) {
        std::uint32_t c = i;
        for (int k = 0; k < 8; ++k) c = (c & 1) ? 0xEDB88320u ^ (c >> 1) : c >> 1;
        table[i] = c;
    }
    return table;
}

void put_u32(std::string& buf, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_f64(std::string& buf, double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    for (int i = 0; i < 8; ++i) buf.push_back(static_cast<char>((bits >> (8 * i)) & 0xFF));
}

std::uint32_t get_u32(const char* p) {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(p[i])) << (8 * i);
    return v;
}

double get_f64(const char* p) {
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(p[i])) << (8 * i);
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
}

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

// strtod accepts "inf" and "nan", which istream extraction does not
bool parse_double(const std::string& tok, double& out) {
    char* end = nullptr;
    out = std::strtod(tok.c_str(), &end);
    return end == tok.c_str() + tok.size() && !tok.empty();
}

std::vector<std::string> split_ws(const std::string& line) {
    std::vector<std::string> toks;
    std::istringstream ss(line);
    std::string t;
    while (ss >> t) toks.push_back(t);
    return toks;
}

}  // namespace

std::uint32_t crc32(const void* data, std::size_t len, std::uint32_t seed) {
    static const auto table = make_crc_table();
    std::uint32_t c = seed ^ 0xFFFFFFFFu;
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < len; ++i) c = table[(c ^ p[i]) & 0xFF] ^ (c >> 8);
    return c ^ 0xFFFFFFFFu;
}

void write_matrix(const MatrixFile& mf, const std::string& path) {
    const std::uint32_t rows = static_cast<std::uint32_t>(mf.matrix.rows());
    const std::uint32_t cols = static_cast<std::uint32_t>(mf.matrix.cols());
    std::string buf;
    buf.reserve(48 + static_cast<std::size_t>(rows) * cols * 8);
    buf.append(kMagic, 8);
    put_u32(buf, 1);  // format version
    put_u32(buf, static_cast<std::uint32_t>(mf.kind));
    put_u32(buf, static_cast<std::uint32_t>(mf.marker_count));
    put_u32(buf, rows);
    put_u32(buf, cols);
    put_u32(buf, kDtypeF64);
    put_f64(buf, mf.weight);
    for (std::uint32_t r = 0; r < rows; ++r)
        for (std::uint32_t c = 0; c < cols; ++c) put_f64(buf, mf.matrix(r, c));
    put_u32(buf, crc32(buf.data(), buf.size()));

    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoFailure("cannot open for writing: " + path);
    os.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (!os) throw IoFailure("write failed: " + path);
}

MatrixFile read_matrix(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoFailure("cannot open: " + path);
    std::string buf((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
    if (buf.size() < 48) throw ParseError("matrix file too short: " + path);
    if (std::memcmp(buf.data(), kMagic, 8) != 0)
        throw ParseError("matrix file has wrong magic: " + path);
    const std::uint32_t version = get_u32(buf.data() + 8);
    if (version != 1)
        throw VersionMismatch("matrix file version " + std::to_string(version) + " unsupported");
    MatrixFile mf;
    mf.kind = static_cast<MatrixFile::Kind>(get_u32(buf.data() + 12));
    mf.marker_count = static_cast<int>(get_u32(buf.data() + 16));
    const std::uint32_t rows = get_u32(buf.data() + 20);
    const std::uint32_t cols = get_u32(buf.data() + 24);
    if (get_u32(buf.data() + 28) != kDtypeF64)
        throw ParseError("matrix file dtype is not f64: " + path);
    mf.weight = get_f64(buf.data() + 32);
    const std::size_t need = 40 + static_cast<std::size_t>(rows) * cols * 8 + 4;
    if (buf.size() != need)
        throw ParseError("matrix file payload size mismatch: " + path);
    const std::uint32_t stored = get_u32(buf.data() + buf.size() - 4);
    if (crc32(buf.data(), buf.size() - 4) != stored)
        throw ParseError("matrix file CRC mismatch: " + path);
    mf.matrix.resize(rows, cols);
    const char* p = buf.data() + 40;
    for (std::uint32_t r = 0; r < rows; ++r)
        for (std::uint32_t c = 0; c < cols; ++c, p += 8) mf.matrix(r, c) = get_f64(p);
    return mf;
}

void write_recording(const Recording& rec, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw IoFailure("cannot open for writing: " + path);
    const auto& g = rec.geometry;
    os << "tac3d_recording 1\n";
    os << "grid " << g.rows << ' ' << g.cols << '\n';
    os << "spacing " << fmt_double(g.spacing_mm) << '\n';
    os << "side " << fmt_double(g.side_mm) << '\n';
    os << "thickness " << fmt_double(g.thickness_mm) << '\n';
    os << "radius " << fmt_double(g.radius_mm) << '\n';
    os << "subdivisions " << g.subdivisions << '\n';
    os << "geometry_hash " << g.hash() << '\n';
    if (!rec.h_file.empty()) os << "h_file " << rec.h_file << '\n';
    if (!rec.pose_file.empty()) os << "pose_file " << rec.pose_file << '\n';
    if (rec.displacement_noise_mm > 0)
        os << "displacement_noise " << fmt_double(rec.displacement_noise_mm) << '\n';
    if (rec.contact_threshold_hint > 0)
        os << "contact_threshold " << fmt_double(rec.contact_threshold_hint) << '\n';
    for (const std::string& line : rec.unknown_header_lines) os << line << '\n';

    os << "columns px py pz dx dy dz";
    if (rec.has_forces) os << " fx fy fz";
    if (rec.has_flags) os << " contact slip";
    if (rec.has_mu) os << " mu";
    for (const std::string& name : rec.extra_columns) os << ' ' << name;
    os << '\n';

    const int n = rec.marker_count();
    for (const FrameRecord& fr : rec.frames) {
        if (static_cast<int>(fr.positions.size()) != n ||
            static_cast<int>(fr.displacements.size()) != n)
            throw DimensionMismatch("recording frame " + std::to_string(fr.frame_index) +
                                    " does not match the header marker count");
        os << "frame " << fr.frame_index << ' ' << fmt_double(fr.timestamp_s) << '\n';
        for (int m = 0; m < n; ++m) {
            os << fmt_double(fr.positions[m].x()) << ' ' << fmt_double(fr.positions[m].y()) << ' '
               << fmt_double(fr.positions[m].z()) << ' ' << fmt_double(fr.displacements[m].x())
               << ' ' << fmt_double(fr.displacements[m].y()) << ' '
               << fmt_double(fr.displacements[m].z());
            if (rec.has_forces)
                os << ' ' << fmt_double(fr.forces[m].x()) << ' ' << fmt_double(fr.forces[m].y())
                   << ' ' << fmt_double(fr.forces[m].z());
            if (rec.has_flags)
                os << ' ' << (fr.contact[m] ? 1 : 0) << ' ' << (fr.slip[m] ? 1 : 0);
            if (rec.has_mu) os << ' ' << fmt_double(fr.mu[m]);
            if (!rec.extra_columns.empty())
                for (double v : fr.extras[m]) os << ' ' << fmt_double(v);
            os << '\n';
        }
    }
    if (!os) throw IoFailure("write failed: " + path);
}

Recording read_recording(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw IoFailure("cannot open: " + path);
    Recording rec;
    std::string line;
    long lineno = 0;

    if (!std::getline(is, line)) throw ParseError("empty recording file", 1);
    ++lineno;
    {
        std::istringstream ss(line);
        std::string magic;
        int version = 0;
        ss >> magic >> version;
        if (magic != "tac3d_recording") throw ParseError("recording: bad magic", lineno);
        if (version != 1)
            throw VersionMismatch("recording version " + std::to_string(version) + " unsupported");
    }

    // header until the columns line
    std::vector<std::string> columns;
    std::string stored_hash;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        const std::vector<std::string> toks = split_ws(line);
        if (toks.empty()) continue;
        const std::string& key = toks[0];
        const auto num = [&](std::size_t i, double& out) {
            if (i >= toks.size() || !parse_double(toks[i], out))
                throw ParseError("recording: malformed '" + key + "' header line", lineno);
        };
        double v;
        if (key == "grid") {
            double r, c;
            num(1, r);
            num(2, c);
            rec.geometry.rows = static_cast<int>(r);
            rec.geometry.cols = static_cast<int>(c);
        } else if (key == "spacing") { num(1, v); rec.geometry.spacing_mm = v; }
        else if (key == "side") { num(1, v); rec.geometry.side_mm = v; }
        else if (key == "thickness") { num(1, v); rec.geometry.thickness_mm = v; }
        else if (key == "radius") { num(1, v); rec.geometry.radius_mm = v; }
        else if (key == "subdivisions") { num(1, v); rec.geometry.subdivisions = static_cast<int>(v); }
        else if (key == "geometry_hash" && toks.size() > 1) stored_hash = toks[1];
        else if (key == "h_file" && toks.size() > 1) rec.h_file = toks[1];
        else if (key == "pose_file" && toks.size() > 1) rec.pose_file = toks[1];
        else if (key == "displacement_noise") { num(1, v); rec.displacement_noise_mm = v; }
        else if (key == "contact_threshold") { num(1, v); rec.contact_threshold_hint = v; }
        else if (key == "columns") {
            columns.assign(toks.begin() + 1, toks.end());
            break;
        } else {
            rec.unknown_header_lines.push_back(line);
        }
    }
    if (columns.empty()) throw ParseError("recording: missing columns declaration", lineno);
    rec.geometry_hash = stored_hash;
    if (!stored_hash.empty() && stored_hash != rec.geometry.hash())
        throw ParseError("recording: geometry hash does not match the header geometry", lineno);

    // column schema: required position/displacement, then optional blocks
    static const std::vector<std::string> base = {"px", "py", "pz", "dx", "dy", "dz"};
    if (columns.size() < base.size() ||
        !std::equal(base.begin(), base.end(), columns.begin()))
        throw ParseError("recording: column schema must start with px py pz dx dy dz", lineno);
    std::size_t at = base.size();
    const auto take = [&](const char* a, const char* b, const char* c) {
        if (at + (c ? 3 : (b ? 2 : 1)) <= columns.size() && columns[at] == a &&
            (!b || columns[at + 1] == b) && (!c || columns[at + 2] == c)) {
            at += c ? 3 : (b ? 2 : 1);
            return true;
        }
        return false;
    };
    rec.has_forces = take("fx", "fy", "fz");
    rec.has_flags = take("contact", "slip", nullptr);
    rec.has_mu = take("mu", nullptr, nullptr);
    for (; at < columns.size(); ++at) rec.extra_columns.push_back(columns[at]);

    const int n = rec.marker_count();
    const std::size_t tokens_per_marker = 6 + (rec.has_forces ? 3 : 0) + (rec.has_flags ? 2 : 0) +
                                          (rec.has_mu ? 1 : 0) + rec.extra_columns.size();
    long last_index = -1;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ss(line);
        std::string key;
        ss >> key;
        if (key != "frame") throw ParseError("recording: expected a frame line", lineno);
        FrameRecord fr;
        if (!(ss >> fr.frame_index >> fr.timestamp_s))
            throw ParseError("recording: malformed frame line", lineno);
        if (fr.frame_index <= last_index)
            throw ParseError("recording: frame indices must be strictly increasing", lineno);
        last_index = fr.frame_index;

        fr.positions.resize(n);
        fr.displacements.resize(n);
        if (rec.has_forces) fr.forces.resize(n);
        if (rec.has_flags) {
            fr.contact.resize(n);
            fr.slip.resize(n);
        }
        if (rec.has_mu) fr.mu.resize(n);
        if (!rec.extra_columns.empty()) fr.extras.resize(n);
        for (int m = 0; m < n; ++m) {
            if (!std::getline(is, line))
                throw ParseError("recording: frame " + std::to_string(fr.frame_index) +
                                     " truncated after marker " + std::to_string(m),
                                 lineno);
            ++lineno;
            const std::vector<std::string> toks = split_ws(line);
            std::vector<double> vals;
            vals.reserve(toks.size());
            for (const std::string& t : toks) {
                double v;
                if (!parse_double(t, v))
                    throw ParseError("recording: non-numeric field '" + t + "'", lineno);
                vals.push_back(v);
            }
            if (vals.size() != tokens_per_marker)
                throw ParseError("recording: frame " + std::to_string(fr.frame_index) +
                                     " marker " + std::to_string(m) + " has " +
                                     std::to_string(vals.size()) + " fields, expected " +
                                     std::to_string(tokens_per_marker),
                                 lineno);
            std::size_t c = 0;
            fr.positions[m] = Vec3(vals[0], vals[1], vals[2]);
            fr.displacements[m] = Vec3(vals[3], vals[4], vals[5]);
            c = 6;
            if (rec.has_forces) {
                fr.forces[m] = Vec3(vals[c], vals[c + 1], vals[c + 2]);
                c += 3;
            }
            if (rec.has_flags) {
                fr.contact[m] = vals[c] != 0.0;
                fr.slip[m] = vals[c + 1] != 0.0;
                c += 2;
            }
            if (rec.has_mu) fr.mu[m] = vals[c++];
            if (!rec.extra_columns.empty())
                fr.extras[m].assign(vals.begin() + static_cast<long>(c), vals.end());
        }
        rec.frames.push_back(std::move(fr));
    }
    return rec;
}

void write_pose_trajectory(const std::vector<mapping::SensorPose>& poses,
                           const std::string& path) {
    std::ofstream os(path);
    if (!os) throw IoFailure("cannot open for writing: " + path);
    os << "# frame timestamp_s tx ty tz qw qx qy qz\n";
    for (const auto& p : poses) {
        const Eigen::Quaterniond q(p.transform.rotation);
        os << p.frame_index << ' ' << fmt_double(p.timestamp_s) << ' '
           << fmt_double(p.transform.translation.x()) << ' '
           << fmt_double(p.transform.translation.y()) << ' '
           << fmt_double(p.transform.translation.z()) << ' ' << fmt_double(q.w()) << ' '
           << fmt_double(q.x()) << ' ' << fmt_double(q.y()) << ' ' << fmt_double(q.z()) << '\n';
    }
    if (!os) throw IoFailure("write failed: " + path);
}

void write_geometry_file(const elasticity::FingertipGeometry& geom,
                         const elasticity::Material& mat, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw IoFailure("cannot open for writing: " + path);
    os << "tac3d_geometry 1\n";
    os << "grid " << geom.rows << ' ' << geom.cols << '\n';
    os << "spacing " << fmt_double(geom.spacing_mm) << '\n';
    os << "side " << fmt_double(geom.side_mm) << '\n';
    os << "thickness " << fmt_double(geom.thickness_mm) << '\n';
    os << "radius " << fmt_double(geom.radius_mm) << '\n';
    os << "subdivisions " << geom.subdivisions << '\n';
    os << "young " << fmt_double(mat.young_kpa) << '\n';
    os << "poisson " << fmt_double(mat.poisson) << '\n';
    if (!os) throw IoFailure("write failed: " + path);
}

void read_geometry_file(const std::string& path, elasticity::FingertipGeometry& geom,
                        elasticity::Material& mat) {
    std::ifstream is(path);
    if (!is) throw IoFailure("cannot open: " + path);
    std::string line;
    long lineno = 0;
    bool header_seen = false;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        const std::vector<std::string> toks = split_ws(line);
        if (toks.empty()) continue;
        const std::string& key = toks[0];
        if (!header_seen) {
            if (key != "tac3d_geometry") throw ParseError("geometry file: bad magic", lineno);
            if (toks.size() < 2 || toks[1] != "1")
                throw VersionMismatch("geometry file: unsupported version");
            header_seen = true;
            continue;
        }
        const auto num = [&](std::size_t i) {
            double v;
            if (i >= toks.size() || !parse_double(toks[i], v))
                throw ParseError("geometry file: malformed '" + key + "' line", lineno);
            return v;
        };
        if (key == "grid") {
            geom.rows = static_cast<int>(num(1));
            geom.cols = static_cast<int>(num(2));
        } else if (key == "spacing") geom.spacing_mm = num(1);
        else if (key == "side") geom.side_mm = num(1);
        else if (key == "thickness") geom.thickness_mm = num(1);
        else if (key == "radius") geom.radius_mm = num(1);
        else if (key == "subdivisions") geom.subdivisions = static_cast<int>(num(1));
        else if (key == "young") mat.young_kpa = num(1);
        else if (key == "poisson") mat.poisson = num(1);
        else throw ParseError("geometry file: unknown key '" + key + "'", lineno);
    }
    if (!header_seen) throw ParseError("geometry file: missing header", lineno);
}

std::vector<mapping::SensorPose> read_pose_trajectory(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw IoFailure("cannot open: " + path);
    std::vector<mapping::SensorPose> poses;
    std::string line;
    long lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        std::istringstream ss(line);
        mapping::SensorPose p;
        double qw, qx, qy, qz;
        if (!(ss >> p.frame_index)) continue;  // blank line
        if (!(ss >> p.timestamp_s >> p.transform.translation.x() >>
              p.transform.translation.y() >> p.transform.translation.z() >> qw >> qx >> qy >> qz))
            throw ParseError("pose trajectory: malformed line", lineno);
        Eigen::Quaterniond q(qw, qx, qy, qz);
        if (std::abs(q.norm() - 1.0) > 1e-6)
            throw ParseError("pose trajectory: quaternion is not unit length", lineno);
        q.normalize();
        p.transform.rotation = q.toRotationMatrix();
        poses.push_back(p);
    }
    return poses;
}

}  // namespace tac3d::pipelineio

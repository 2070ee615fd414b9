#include "topoforge/io.hpp"

#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <stdexcept>

namespace topoforge {

namespace {

constexpr char kMagic[4] = {'T', 'D', 'T', 'O'};
constexpr std::uint8_t kVersion = 1;

void put_u32(std::ostream& out, std::uint32_t v) {
    unsigned char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    out.write(reinterpret_cast<const char*>(b), 4);
}

void put_f64(std::ostream& out, double v) {
    const std::uint64_t u = std::bit_cast<std::uint64_t>(v);
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(u >> (8 * i));
    out.write(reinterpret_cast<const char*>(b), 8);
}

std::uint32_t get_u32(std::istream& in) {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= std::uint32_t(b[i]) << (8 * i);
    return v;
}

double get_f64(std::istream& in) {
    unsigned char b[8];
    in.read(reinterpret_cast<char*>(b), 8);
    std::uint64_t u = 0;
    for (int i = 0; i < 8; ++i) u |= std::uint64_t(b[i]) << (8 * i);
    return std::bit_cast<double>(u);
}

// reads and checks magic + version; false only at clean end-of-file
bool read_header(std::istream& in, const std::string& path) {
    char magic[4];
    in.read(magic, 4);
    if (in.gcount() == 0 && in.eof()) return false;
    if (in.gcount() != 4 || std::memcmp(magic, kMagic, 4) != 0)
        throw std::runtime_error(path + ": not a TDTO file");
    const int version = in.get();
    if (version != kVersion)
        throw std::runtime_error(path + ": unsupported TDTO version " + std::to_string(version));
    return true;
}

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error(path + ": cannot open for writing");
    return out;
}

std::ifstream open_in(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error(path + ": cannot open");
    return in;
}

}  // namespace

void write_records(const std::string& path, const std::vector<SolveRecord>& records) {
    std::ofstream out = open_out(path);
    for (const SolveRecord& rec : records) {
        if (rec.x.size() != rec.grad_f.size())
            throw std::invalid_argument(path + ": record design/sensitivity size mismatch");
        out.write(kMagic, 4);
        out.put(static_cast<char>(kVersion));
        put_u32(out, static_cast<std::uint32_t>(rec.x.size()));
        put_u32(out, static_cast<std::uint32_t>(rec.setting.size()));
        for (double v : rec.setting) put_f64(out, v);
        for (int e = 0; e < rec.x.size(); ++e) put_f64(out, rec.x[e]);
        put_f64(out, rec.f);
        for (int e = 0; e < rec.grad_f.size(); ++e) put_f64(out, rec.grad_f[e]);
        put_f64(out, static_cast<double>(rec.fea_count));
    }
    if (!out) throw std::runtime_error(path + ": write failed");
}

std::vector<SolveRecord> read_records(const std::string& path) {
    std::ifstream in = open_in(path);
    std::vector<SolveRecord> records;
    while (read_header(in, path)) {
        const std::uint32_t n = get_u32(in);
        const std::uint32_t dim = get_u32(in);
        SolveRecord rec;
        rec.setting.resize(dim);
        for (double& v : rec.setting) v = get_f64(in);
        rec.x.resize(n);
        for (std::uint32_t e = 0; e < n; ++e) rec.x[e] = get_f64(in);
        rec.f = get_f64(in);
        rec.grad_f.resize(n);
        for (std::uint32_t e = 0; e < n; ++e) rec.grad_f[e] = get_f64(in);
        rec.fea_count = static_cast<std::int64_t>(get_f64(in));
        if (!in) throw std::runtime_error(path + ": truncated record");
        records.push_back(std::move(rec));
    }
    return records;
}

void write_model(const std::string& path, const GeneratorParams& params) {
    params.arch.validate();
    std::ofstream out = open_out(path);
    out.write(kMagic, 4);
    out.put(static_cast<char>(kVersion));
    put_u32(out, static_cast<std::uint32_t>(params.arch.layers.size()));
    for (int width : params.arch.layers) put_u32(out, static_cast<std::uint32_t>(width));
    for (std::size_t l = 0; l < params.w.size(); ++l) {
        const Eigen::MatrixXd& w = params.w[l];
        for (int r = 0; r < w.rows(); ++r)
            for (int c = 0; c < w.cols(); ++c) put_f64(out, w(r, c));
        for (int r = 0; r < params.b[l].size(); ++r) put_f64(out, params.b[l][r]);
    }
    if (!out) throw std::runtime_error(path + ": write failed");
}

GeneratorParams read_model(const std::string& path) {
    std::ifstream in = open_in(path);
    if (!read_header(in, path)) throw std::runtime_error(path + ": empty model file");
    const std::uint32_t n_layers = get_u32(in);
    if (n_layers < 2 || n_layers > 64) throw std::runtime_error(path + ": bad architecture");
    GeneratorParams params;
    params.arch.layers.resize(n_layers);
    for (std::uint32_t l = 0; l < n_layers; ++l)
        params.arch.layers[l] = static_cast<int>(get_u32(in));
    params.arch.validate();
    params.w.resize(n_layers - 1);
    params.b.resize(n_layers - 1);
    for (std::uint32_t l = 0; l + 1 < n_layers; ++l) {
        const int rows = params.arch.layers[l + 1], cols = params.arch.layers[l];
        params.w[l].resize(rows, cols);
        for (int r = 0; r < rows; ++r)
            for (int c = 0; c < cols; ++c) params.w[l](r, c) = get_f64(in);
        params.b[l].resize(rows);
        for (int r = 0; r < rows; ++r) params.b[l][r] = get_f64(in);
    }
    if (!in) throw std::runtime_error(path + ": truncated model file");
    if (in.peek() != EOF) throw std::runtime_error(path + ": trailing bytes after model");
    return params;
}

void write_pgm(const std::string& path, const Mesh& mesh, const Eigen::VectorXd& rho) {
    if (rho.size() != mesh.n_elements())
        throw std::invalid_argument(path + ": density size does not match mesh");
    std::ofstream out = open_out(path);
    out << "P5\n" << mesh.nx() << " " << mesh.ny() << "\n255\n";
    for (int ey = mesh.ny() - 1; ey >= 0; --ey)
        for (int ex = 0; ex < mesh.nx(); ++ex) {
            const double v = std::clamp(rho[mesh.element_id(ex, ey)], 0.0, 1.0);
            out.put(static_cast<char>(std::lround(255.0 * v)));
        }
    if (!out) throw std::runtime_error(path + ": write failed");
}

Eigen::VectorXd read_pgm(const std::string& path, const Mesh& mesh) {
    std::ifstream in = open_in(path);
    std::string magic;
    int w = 0, h = 0, maxval = 0;
    in >> magic >> w >> h >> maxval;
    if (magic != "P5" || maxval != 255) throw std::runtime_error(path + ": not a P5/255 PGM");
    if (w != mesh.nx() || h != mesh.ny())
        throw std::runtime_error(path + ": image size does not match mesh");
    in.get();  // single whitespace after the header
    Eigen::VectorXd rho(mesh.n_elements());
    for (int ey = mesh.ny() - 1; ey >= 0; --ey)
        for (int ex = 0; ex < mesh.nx(); ++ex) {
            const int byte = in.get();
            if (byte == EOF) throw std::runtime_error(path + ": truncated PGM");
            rho[mesh.element_id(ex, ey)] = byte / 255.0;
        }
    return rho;
}

HistoryWriter::HistoryWriter(const std::string& path) : out_(path, std::ios::trunc) {
    if (!out_) throw std::runtime_error(path + ": cannot open for writing");
    out_ << "iteration,remaining_budget,chosen_setting,score,test_metric\n";
    out_.flush();
}

void HistoryWriter::append(int iteration, double remaining_budget,
                           const std::vector<double>& setting, double score,
                           double test_metric) {
    out_ << iteration << "," << format_double(remaining_budget) << ",";
    for (std::size_t i = 0; i < setting.size(); ++i)
        out_ << (i ? ";" : "") << format_double(setting[i]);
    out_ << "," << format_double(score) << "," << format_double(test_metric) << "\n";
    out_.flush();
}

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace topoforge

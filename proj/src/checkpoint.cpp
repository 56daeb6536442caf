#include "mfard/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <sstream>
#include <string>

namespace mfard {

namespace {

enum class Kind : std::uint32_t { Network = 0, Particles = 1 };

class Writer {
public:
    explicit Writer(const std::filesystem::path& path) : out_(path, std::ios::binary | std::ios::trunc) {
        if (!out_) throw Error("checkpoint: cannot open " + path.string() + " for writing");
    }
    template <class T>
    void pod(const T& v) {
        out_.write(reinterpret_cast<const char*>(&v), sizeof(T));
    }
    void doubles(const double* p, std::size_t n) { out_.write(reinterpret_cast<const char*>(p), sizeof(double) * n); }
    void text(const std::string& s) {
        pod<std::uint64_t>(s.size());
        out_.write(s.data(), static_cast<std::streamsize>(s.size()));
    }
    void finish(const std::filesystem::path& path) {
        out_.flush();
        if (!out_) throw Error("checkpoint: write failed for " + path.string());
    }

private:
    std::ofstream out_;
};

class Reader {
public:
    explicit Reader(const std::filesystem::path& path) : in_(path, std::ios::binary), path_(path) {
        if (!in_) throw Error("checkpoint: cannot open " + path.string());
    }
    template <class T>
    T pod() {
        T v{};
        in_.read(reinterpret_cast<char*>(&v), sizeof(T));
        check();
        return v;
    }
    void doubles(double* p, std::size_t n) {
        in_.read(reinterpret_cast<char*>(p), static_cast<std::streamsize>(sizeof(double) * n));
        check();
    }
    std::string text() {
        const auto n = pod<std::uint64_t>();
        if (n > (1u << 24)) throw InputDomainError("checkpoint: corrupt string length in " + path_.string());
        std::string s(n, '\0');
        in_.read(s.data(), static_cast<std::streamsize>(n));
        check();
        return s;
    }

private:
    void check() {
        if (!in_) throw InputDomainError("checkpoint: truncated file " + path_.string());
    }
    std::ifstream in_;
    std::filesystem::path path_;
};

void write_header(Writer& w, Kind kind, const Hyperparams& h, double sigma_b, std::int64_t step) {
    for (char c : kCheckpointMagic) w.pod(c);
    w.pod(kCheckpointVersion);
    w.pod(static_cast<std::uint32_t>(kind));
    w.pod<std::int32_t>(h.N);
    w.pod(h.gamma);
    w.pod(h.sigma_w);
    w.pod(h.sigma_a);
    w.pod(h.kappa);
    w.pod(sigma_b);
    w.pod(step);
}

struct Header {
    Hyperparams hyper;
    double sigma_b = 1.0;
    std::int64_t step = 0;
};

Header read_header(Reader& r, Kind expected) {
    char magic[8];
    for (char& c : magic) c = r.pod<char>();
    if (std::memcmp(magic, kCheckpointMagic, 8) != 0) throw InputDomainError("checkpoint: bad magic header");
    const auto version = r.pod<std::uint32_t>();
    if (version != kCheckpointVersion)
        throw InputDomainError("checkpoint: unsupported version " + std::to_string(version));
    if (r.pod<std::uint32_t>() != static_cast<std::uint32_t>(expected))
        throw InputDomainError("checkpoint: file holds a different state kind");
    Header h;
    h.hyper.N = r.pod<std::int32_t>();
    h.hyper.gamma = r.pod<double>();
    h.hyper.sigma_w = r.pod<double>();
    h.hyper.sigma_a = r.pod<double>();
    h.hyper.kappa = r.pod<double>();
    h.sigma_b = r.pod<double>();
    h.step = r.pod<std::int64_t>();
    return h;
}

void write_units(Writer& w, const Matrix& W, const Vector& a, const std::optional<Vector>& b) {
    w.pod<std::int64_t>(W.rows());
    w.pod<std::int64_t>(W.cols());
    const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm = W;
    w.doubles(rm.data(), static_cast<std::size_t>(rm.size()));
    w.doubles(a.data(), static_cast<std::size_t>(a.size()));
    w.pod<std::uint8_t>(b ? 1 : 0);
    if (b) w.doubles(b->data(), static_cast<std::size_t>(b->size()));
}

void read_units(Reader& r, Matrix& W, Vector& a, std::optional<Vector>& b) {
    const auto rows = r.pod<std::int64_t>();
    const auto cols = r.pod<std::int64_t>();
    if (rows < 1 || cols < 1 || rows * cols > (std::int64_t{1} << 32))
        throw InputDomainError("checkpoint: corrupt dimensions");
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm(rows, cols);
    r.doubles(rm.data(), static_cast<std::size_t>(rm.size()));
    W = rm;
    a.resize(rows);
    r.doubles(a.data(), static_cast<std::size_t>(rows));
    if (r.pod<std::uint8_t>()) {
        b = Vector(rows);
        r.doubles(b->data(), static_cast<std::size_t>(rows));
    } else {
        b.reset();
    }
}

std::string rng_text(const Rng& rng) {
    std::ostringstream os;
    os << rng;
    return os.str();
}

Rng rng_from_text(const std::string& s) {
    Rng rng;
    std::istringstream is(s);
    is >> rng;
    if (!is) throw InputDomainError("checkpoint: corrupt RNG state");
    return rng;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const NetworkCheckpoint& ck) {
    Writer w(path);
    write_header(w, Kind::Network, ck.params.hyper, ck.params.sigma_b, ck.step);
    write_units(w, ck.params.W, ck.params.a, ck.params.b);
    w.text(rng_text(ck.rng));
    w.finish(path);
}

void save_checkpoint(const std::filesystem::path& path, const ParticleCheckpoint& ck) {
    const ParticleState& s = ck.state;
    Writer w(path);
    write_header(w, Kind::Particles, s.hyper, s.sigma_b, ck.step);
    write_units(w, s.W, s.a, s.b);
    w.text(rng_text(ck.rng));
    w.doubles(s.rho.data(), static_cast<std::size_t>(s.rho.size()));
    w.pod(s.s_f);
    w.pod<std::uint8_t>(ck.ard.enabled ? 1 : 0);
    w.pod(ck.ard.alpha0);
    w.pod<std::uint8_t>(ck.ard.beta0 ? 1 : 0);
    w.pod(ck.ard.beta0.value_or(0.0));
    w.pod(ck.ard.lambda);
    w.pod(ck.ard.rho_min);
    w.pod(ck.ard.rho_max);
    w.finish(path);
}

NetworkCheckpoint load_network_checkpoint(const std::filesystem::path& path) {
    Reader r(path);
    const Header h = read_header(r, Kind::Network);
    NetworkCheckpoint ck;
    ck.params.hyper = h.hyper;
    ck.params.sigma_b = h.sigma_b;
    ck.step = h.step;
    read_units(r, ck.params.W, ck.params.a, ck.params.b);
    ck.rng = rng_from_text(r.text());
    return ck;
}

ParticleCheckpoint load_particle_checkpoint(const std::filesystem::path& path) {
    Reader r(path);
    const Header h = read_header(r, Kind::Particles);
    ParticleCheckpoint ck;
    ck.state.hyper = h.hyper;
    ck.state.sigma_b = h.sigma_b;
    ck.step = h.step;
    read_units(r, ck.state.W, ck.state.a, ck.state.b);
    ck.rng = rng_from_text(r.text());
    ck.state.rho.resize(ck.state.W.cols());
    r.doubles(ck.state.rho.data(), static_cast<std::size_t>(ck.state.rho.size()));
    ck.state.s_f = r.pod<double>();
    ck.ard.enabled = r.pod<std::uint8_t>() != 0;
    ck.ard.alpha0 = r.pod<double>();
    const bool has_beta = r.pod<std::uint8_t>() != 0;
    const double beta = r.pod<double>();
    if (has_beta) ck.ard.beta0 = beta;
    ck.ard.lambda = r.pod<double>();
    ck.ard.rho_min = r.pod<double>();
    ck.ard.rho_max = r.pod<double>();
    return ck;
}

}  // namespace mfard

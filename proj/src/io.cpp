#include "atomline/io.hpp"

#include <charconv>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace atomline {

namespace {

json complex_to_json(cplx c) { return json::array({c.real(), c.imag()}); }

cplx complex_from_json(const json& j) {
    if (j.is_number()) return {j.get<double>(), 0.0};
    if (!j.is_array() || j.size() != 2) throw InvalidArgument("complex value must be [re, im]");
    return {j[0].get<double>(), j[1].get<double>()};
}

}  // namespace

json spectrum_to_json(const LineSpectrum& s, int n) {
    json j;
    j["n"] = n;
    j["freqs"] = json::array();
    j["coeffs"] = json::array();
    for (Eigen::Index l = 0; l < s.k(); ++l) {
        j["freqs"].push_back(s.freqs[l]);
        j["coeffs"].push_back(complex_to_json(s.coeffs[l]));
    }
    return j;
}

LineSpectrum spectrum_from_json(const json& j) {
    const auto& jf = j.at("freqs");
    const auto& jc = j.at("coeffs");
    if (jf.size() != jc.size()) throw InvalidArgument("freqs and coeffs differ in length");
    RVec f(static_cast<Eigen::Index>(jf.size()));
    CVec c(static_cast<Eigen::Index>(jc.size()));
    for (size_t i = 0; i < jf.size(); ++i) {
        f[static_cast<Eigen::Index>(i)] = jf[i].get<double>();
        c[static_cast<Eigen::Index>(i)] = complex_from_json(jc[i]);
    }
    return LineSpectrum(f, c);
}

json samples_to_json(const SampleFile& f) {
    json j;
    if (f.truth) j = spectrum_to_json(*f.truth, f.samples.n);
    j["n"] = f.samples.n;
    j["values"] = json::array();
    for (Eigen::Index i = 0; i < f.samples.size(); ++i) j["values"].push_back(complex_to_json(f.samples.values[i]));
    if (f.sigma) j["sigma"] = *f.sigma;
    return j;
}

SampleFile samples_from_json(const json& j) {
    const int n = j.at("n").get<int>();
    SampleFile out;
    if (j.contains("freqs")) out.truth = spectrum_from_json(j);
    if (j.contains("sigma")) out.sigma = j["sigma"].get<double>();
    if (j.contains("values")) {
        const auto& jv = j["values"];
        CVec v(static_cast<Eigen::Index>(jv.size()));
        for (size_t i = 0; i < jv.size(); ++i) v[static_cast<Eigen::Index>(i)] = complex_from_json(jv[i]);
        out.samples = SampleVector(n, v);
    } else if (out.truth) {
        out.samples = synthesize(*out.truth, n);
    } else {
        throw InvalidArgument("sample file needs \"values\" or a spectrum");
    }
    return out;
}

std::string samples_to_csv(const SampleVector& y) {
    std::string s = csv_row({"t", "re", "im"});
    for (int t = -y.n; t <= y.n; ++t) {
        const cplx v = y.at(t);
        s += csv_row({std::to_string(t), format_double(v.real()), format_double(v.imag())});
    }
    return s;
}

SampleVector samples_from_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    std::getline(in, line);
    if (line.rfind("t,re,im", 0) != 0) throw InvalidArgument("sample CSV must start with header t,re,im");
    std::vector<std::pair<int, cplx>> rows;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string a, b, c;
        std::getline(ls, a, ',');
        std::getline(ls, b, ',');
        std::getline(ls, c, ',');
        rows.emplace_back(std::stoi(a), cplx(std::stod(b), std::stod(c)));
    }
    if (rows.empty() || rows.size() % 2 == 0) throw InvalidArgument("sample CSV must hold 2n+1 rows");
    const int n = static_cast<int>(rows.size() / 2);
    CVec v(static_cast<Eigen::Index>(rows.size()));
    for (const auto& [t, val] : rows) {
        if (t < -n || t > n) throw InvalidArgument("sample index out of range");
        v[t + n] = val;
    }
    return SampleVector(n, v);
}

json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    return json::parse(in);
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << text;
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char ch : s) {
        if (ch == '"') q += '"';
        q += ch;
    }
    return q + "\"";
}

std::string csv_row(const std::vector<std::string>& fields) {
    std::string row;
    for (size_t i = 0; i < fields.size(); ++i) {
        if (i) row += ',';
        row += csv_field(fields[i]);
    }
    // RFC 4180 line terminator
    return row + "\r\n";
}

std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

std::string fnv1a_hex(const std::string& data) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : data) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    static const char* hex = "0123456789abcdef";
    for (int i = 15; i >= 0; --i) {
        buf[i] = hex[h & 0xf];
        h >>= 4;
    }
    buf[16] = '\0';
    return buf;
}

}  // namespace atomline

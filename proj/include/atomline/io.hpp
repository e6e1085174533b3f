#pragma once

#include "atomline/signal_model.hpp"

#include <json.hpp>
#include <optional>
#include <string>
#include <vector>

namespace atomline {

using json = nlohmann::json;

json spectrum_to_json(const LineSpectrum& s, int n);
LineSpectrum spectrum_from_json(const json& j);

// {"n":..., "values":[[re,im],...]} plus optional truth ("freqs","coeffs") and "sigma"
struct SampleFile {
    SampleVector samples;
    std::optional<LineSpectrum> truth;
    std::optional<double> sigma;
};

json samples_to_json(const SampleFile& f);
SampleFile samples_from_json(const json& j);

std::string samples_to_csv(const SampleVector& y);
SampleVector samples_from_csv(const std::string& text);

json read_json_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);
std::string read_text_file(const std::string& path);

// RFC-4180 field quoting
std::string csv_field(const std::string& s);
std::string csv_row(const std::vector<std::string>& fields);

// shortest round-trip decimal form, locale independent
std::string format_double(double v);

// 64-bit FNV-1a, hex encoded
std::string fnv1a_hex(const std::string& data);

}  // namespace atomline

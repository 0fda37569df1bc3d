#include "vmicm/csv.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <vector>

#include "vmicm/error.hpp"

namespace vmicm {
namespace {

std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r");
    if (begin == std::string::npos) return {};
    const auto end = s.find_last_not_of(" \t\r");
    return s.substr(begin, end - begin + 1);
}

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream in(line);
    while (std::getline(in, cell, ',')) out.push_back(trim(cell));
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

bool parse_double(const std::string& text, double& value) {
    if (text.empty()) return false;
    const char* first = text.data();
    const char* last = first + text.size();
    if (*first == '+') ++first;
    const auto [ptr, ec] = std::from_chars(first, last, value);
    return ec == std::errc() && ptr == last;
}

}  // namespace

std::string format_double(double value) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", value);
    return buf;
}

Dataset read_dataset(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw InputError("input is empty; expected a header row");
    const auto header = split(line);
    if (header.empty() || header[0] != "y") throw InputError("header column 1 must be 'y'");

    std::size_t q = 0;
    std::size_t p = 0;
    std::size_t col = 1;
    for (; col < header.size() && header[col] == "x" + std::to_string(q + 1); ++col) ++q;
    for (; col < header.size() && header[col] == "g" + std::to_string(p + 1); ++col) ++p;
    if (col != header.size()) {
        throw InputError("unexpected header column " + std::to_string(col + 1) + " '" +
                         header[col] + "'; expected y, x1..xq, g1..gp");
    }
    if (q == 0) throw InputError("header has no x columns");
    if (p == 0) throw InputError("header has no g columns");

    std::vector<std::vector<double>> rows;
    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (trim(line).empty()) continue;
        const auto cells = split(line);
        if (cells.size() != header.size()) {
            throw InputError("row " + std::to_string(row) + " has " + std::to_string(cells.size()) +
                             " cells, expected " + std::to_string(header.size()));
        }
        std::vector<double> values(cells.size());
        for (std::size_t j = 0; j < cells.size(); ++j) {
            if (!parse_double(cells[j], values[j]) || !std::isfinite(values[j])) {
                throw InputError("row " + std::to_string(row) + ", column '" + header[j] +
                                 "': not a finite number: '" + cells[j] + "'");
            }
        }
        rows.push_back(std::move(values));
    }
    if (rows.empty()) throw InputError("input has no data rows");

    const auto n = static_cast<Eigen::Index>(rows.size());
    Eigen::VectorXd y(n);
    Eigen::MatrixXd x(n, static_cast<Eigen::Index>(q));
    Eigen::MatrixXd genes(n, static_cast<Eigen::Index>(p));
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& r = rows[static_cast<std::size_t>(i)];
        y[i] = r[0];
        for (std::size_t d = 0; d < q; ++d) x(i, static_cast<Eigen::Index>(d)) = r[1 + d];
        for (std::size_t k = 0; k < p; ++k) genes(i, static_cast<Eigen::Index>(k)) = r[1 + q + k];
    }
    try {
        return make_dataset(std::move(y), std::move(x), genes);
    } catch (const std::exception& e) {
        throw InputError(e.what());
    }
}

Dataset read_dataset_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open data file '" + path + "'");
    return read_dataset(in);
}

void write_dataset(std::ostream& out, const Dataset& data) {
    out << "y";
    for (Eigen::Index d = 0; d < data.q(); ++d) out << ",x" << d + 1;
    for (Eigen::Index k = 1; k <= data.p(); ++k) out << ",g" << k;
    out << "\n";
    for (Eigen::Index i = 0; i < data.n(); ++i) {
        out << format_double(data.y[i]);
        for (Eigen::Index d = 0; d < data.q(); ++d) out << ',' << format_double(data.x(i, d));
        for (Eigen::Index k = 1; k <= data.p(); ++k) out << ',' << format_double(data.g(i, k));
        out << "\n";
    }
}

void write_dataset_file(const std::string& path, const Dataset& data) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot write '" + path + "'");
    write_dataset(out, data);
}

std::map<std::string, std::string> read_key_values(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open config file '" + path + "'");
    std::map<std::string, std::string> out;
    std::string line;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        ++row;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw InputError("config line " + std::to_string(row) + ": expected key = value");
        }
        out[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
    }
    return out;
}

}  // namespace vmicm

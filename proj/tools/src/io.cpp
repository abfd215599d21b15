#include "sasfm_cli/io.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unistd.h>

namespace sasfm::cli {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        std::string cell = line.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
        if (!cell.empty() && cell.back() == '\r') cell.pop_back();
        cells.push_back(std::move(cell));
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    return cells;
}

double parse_cell(const std::string& cell, const std::filesystem::path& path, std::size_t line) {
    double value = 0.0;
    const char* begin = cell.data();
    const char* end = begin + cell.size();
    while (begin < end && *begin == ' ') ++begin;
    if (begin < end && *begin == '+') ++begin;
    const auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc{} || ptr != end)
        throw DataError(path.string() + ":" + std::to_string(line) + ": not a number: '" + cell + "'");
    if (!std::isfinite(value))
        throw DataError(path.string() + ":" + std::to_string(line) + ": non-finite value '" + cell + "'");
    return value;
}

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;
};

Table read_table(const std::filesystem::path& path) {
    std::istringstream in(read_text(path));
    Table table;
    std::string line;
    std::size_t number = 0;
    while (std::getline(in, line)) {
        ++number;
        if (line.empty() || line == "\r") continue;
        auto cells = split_csv_line(line);
        if (table.header.empty()) {
            table.header = std::move(cells);
            continue;
        }
        if (cells.size() != table.header.size())
            throw DataError(path.string() + ":" + std::to_string(number) + ": expected " +
                            std::to_string(table.header.size()) + " columns, found " + std::to_string(cells.size()));
        std::vector<double> row;
        row.reserve(cells.size());
        for (const auto& c : cells) row.push_back(parse_cell(c, path, number));
        table.rows.push_back(std::move(row));
    }
    if (table.header.empty()) throw DataError(path.string() + ": empty file");
    return table;
}

void append_row(std::string& out, std::span<const double> values) {
    for (std::size_t k = 0; k < values.size(); ++k) {
        if (k) out += ',';
        out += format_double(values[k]);
    }
    out += '\n';
}

}  // namespace

std::string format_double(double value) {
    std::array<char, 64> buf{};
    const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
    if (ec != std::errc{}) throw IoError("cannot format number");
    return std::string(buf.data(), ptr);
}

std::string read_text(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read '" + path.string() + "'");
    std::ostringstream text;
    text << in.rdbuf();
    return text.str();
}

void OutputBatch::add(const std::string& name, std::string content) {
    files_.emplace_back(name, std::move(content));
}

std::vector<std::filesystem::path> OutputBatch::commit() {
    std::error_code ec;
    std::filesystem::create_directories(dir_, ec);
    if (ec) throw IoError("cannot create output directory '" + dir_.string() + "': " + ec.message());
    const std::string suffix = ".tmp." + std::to_string(::getpid());
    std::vector<std::filesystem::path> temps;
    const auto cleanup = [&] {
        for (const auto& t : temps) std::filesystem::remove(t, ec);
    };
    for (const auto& [name, content] : files_) {
        const auto temp = dir_ / (name + suffix);
        temps.push_back(temp);
        std::ofstream out(temp, std::ios::binary | std::ios::trunc);
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        out.close();
        if (!out) {
            cleanup();
            throw IoError("cannot write '" + temp.string() + "'");
        }
    }
    std::vector<std::filesystem::path> written;
    for (std::size_t k = 0; k < files_.size(); ++k) {
        const auto target = dir_ / files_[k].first;
        std::filesystem::rename(temps[k], target, ec);
        if (ec) {
            cleanup();
            throw IoError("cannot rename into '" + target.string() + "': " + ec.message());
        }
        written.push_back(target);
    }
    files_.clear();
    return written;
}

std::string dataset_csv(const std::vector<double>& times, const Dataset& data) {
    std::string out = "t";
    for (std::size_t i = 0; i < data.size(); ++i) out += ",f_" + std::to_string(i + 1);
    out += '\n';
    std::vector<double> row(data.size() + 1);
    for (std::size_t j = 0; j < times.size(); ++j) {
        row[0] = times[j];
        for (std::size_t i = 0; i < data.size(); ++i) row[i + 1] = data[i][static_cast<Eigen::Index>(j)];
        append_row(out, row);
    }
    return out;
}

LoadedDataset read_dataset_csv(const std::filesystem::path& path) {
    const Table table = read_table(path);
    if (table.header.size() < 2) throw DataError(path.string() + ": need a time column and at least one observation");
    if (table.rows.size() < 2) throw DataError(path.string() + ": need at least two time points");
    std::vector<double> times;
    for (const auto& row : table.rows) times.push_back(row[0]);
    for (std::size_t j = 1; j < times.size(); ++j)
        if (!(times[j] > times[j - 1]))
            throw DataError(path.string() + ": time column is not strictly increasing at row " + std::to_string(j + 1));
    const double lo = times.front(), hi = times.back();
    std::vector<double> scaled(times.size());
    for (std::size_t j = 0; j < times.size(); ++j) scaled[j] = (times[j] - lo) / (hi - lo);
    scaled.front() = 0.0;
    scaled.back() = 1.0;
    if (lo == 0.0 && hi == 1.0) scaled = times;

    Dataset data(table.header.size() - 1, FunctionSample(static_cast<Eigen::Index>(times.size())));
    for (std::size_t j = 0; j < table.rows.size(); ++j)
        for (std::size_t i = 0; i + 1 < table.header.size(); ++i)
            data[i][static_cast<Eigen::Index>(j)] = table.rows[j][i + 1];
    return {TimeGrid(scaled), std::move(data), std::move(times)};
}

std::vector<std::string> draws_header(const ModelConfig& config, std::size_t observations) {
    std::vector<std::string> header{"iteration"};
    for (std::size_t k = 0; k < config.fixed_count; ++k) header.push_back("a_" + std::to_string(k + 1));
    header.emplace_back("sigma2");
    header.emplace_back("sigma_c2");
    for (std::size_t i = 0; i < observations; ++i) {
        if (config.prior_model == PriorModel::OneParameter) {
            header.push_back("alpha_" + std::to_string(i + 1));
        } else {
            for (std::size_t k = 1; k + 1 < config.phase_knots; ++k)
                header.push_back("gamma_" + std::to_string(i + 1) + "_" + std::to_string(k));
        }
    }
    return header;
}

std::string draws_csv(const PosteriorDraws& draws) {
    ModelConfig shape;
    shape.fixed_count = static_cast<std::size_t>(draws.a.cols());
    shape.prior_model = draws.prior_model;
    shape.phase_knots = draws.phase_knots.size();
    const auto header = draws_header(shape, draws.observations);
    std::string out;
    for (std::size_t k = 0; k < header.size(); ++k) out += (k ? "," : "") + header[k];
    out += '\n';
    std::vector<double> row;
    for (std::size_t j = 0; j < draws.size(); ++j) {
        const auto r = static_cast<Eigen::Index>(j);
        row.clear();
        row.push_back(static_cast<double>(draws.iterations[j]));
        for (Eigen::Index k = 0; k < draws.a.cols(); ++k) row.push_back(draws.a(r, k));
        row.push_back(draws.sigma2[j]);
        row.push_back(draws.sigma_c2[j]);
        for (Eigen::Index k = 0; k < draws.phase_params.cols(); ++k) row.push_back(draws.phase_params(r, k));
        append_row(out, row);
    }
    return out;
}

PosteriorDraws read_draws_csv(const std::filesystem::path& path, const ModelConfig& config,
                              std::size_t observations) {
    const Table table = read_table(path);
    const auto expected = draws_header(config, observations);
    if (table.header != expected)
        throw DataError(path.string() + ": header does not match the model config (expected " +
                        std::to_string(expected.size()) + " columns starting '" + expected.front() + "', found " +
                        std::to_string(table.header.size()) + ")");
    PosteriorDraws d;
    d.prior_model = config.prior_model;
    d.phase_knots = config.knots();
    d.observations = observations;
    const auto bf = static_cast<Eigen::Index>(config.fixed_count);
    const auto rows = static_cast<Eigen::Index>(table.rows.size());
    const auto per = static_cast<Eigen::Index>(observations * d.params_per_phase());
    d.a.resize(rows, bf);
    d.phase_params.resize(rows, per);
    for (Eigen::Index j = 0; j < rows; ++j) {
        const auto& row = table.rows[static_cast<std::size_t>(j)];
        d.iterations.push_back(static_cast<std::size_t>(row[0]));
        for (Eigen::Index k = 0; k < bf; ++k) d.a(j, k) = row[static_cast<std::size_t>(1 + k)];
        d.sigma2.push_back(row[static_cast<std::size_t>(1 + bf)]);
        d.sigma_c2.push_back(row[static_cast<std::size_t>(2 + bf)]);
        for (Eigen::Index k = 0; k < per; ++k) d.phase_params(j, k) = row[static_cast<std::size_t>(3 + bf + k)];
        d.log_likelihood.push_back(std::nan(""));
    }
    return d;
}

}  // namespace sasfm::cli

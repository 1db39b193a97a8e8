#include "fitolab/path.hpp"

#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>

namespace fitolab {

namespace {

void format_double(std::ostream& out, double x) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof(buf), x);
    out.write(buf, res.ptr - buf);
}

}  // namespace

Path::Path(TimeGridPtr grid, std::size_t dim, std::vector<double> values,
           std::vector<double> increments)
    : grid_(std::move(grid)), dim_(dim), values_(std::move(values)),
      increments_(std::move(increments)) {}

Path Path::from_values(TimeGridPtr grid, std::size_t dim, std::vector<double> values) {
    if (!grid) throw std::invalid_argument("Path: null grid");
    if (dim < 1) throw std::invalid_argument("Path: dimension must be >= 1");
    const std::size_t points = grid->size();
    if (values.size() != points * dim) {
        throw std::invalid_argument("Path: value row count does not match grid");
    }
    std::vector<double> increments((points - 1) * dim);
    for (std::size_t k = 0; k + 1 < points; ++k) {
        for (std::size_t i = 0; i < dim; ++i) {
            increments[k * dim + i] = values[(k + 1) * dim + i] - values[k * dim + i];
        }
    }
    return Path(std::move(grid), dim, std::move(values), std::move(increments));
}

Path Path::from_increments(TimeGridPtr grid, std::size_t dim,
                           std::span<const double> first_row,
                           std::vector<double> increments) {
    if (!grid) throw std::invalid_argument("Path: null grid");
    if (dim < 1) throw std::invalid_argument("Path: dimension must be >= 1");
    const std::size_t points = grid->size();
    if (first_row.size() != dim) {
        throw std::invalid_argument("Path: first row size does not match dimension");
    }
    if (increments.size() != (points - 1) * dim) {
        throw std::invalid_argument("Path: increment row count does not match grid");
    }
    std::vector<double> values(points * dim);
    for (std::size_t i = 0; i < dim; ++i) values[i] = first_row[i];
    for (std::size_t k = 0; k + 1 < points; ++k) {
        for (std::size_t i = 0; i < dim; ++i) {
            values[(k + 1) * dim + i] = values[k * dim + i] + increments[k * dim + i];
        }
    }
    return Path(std::move(grid), dim, std::move(values), std::move(increments));
}

bool Path::all_finite() const {
    for (double v : values_) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

Path stop_path(const Path& p, std::size_t k) {
    const std::size_t points = p.grid().size();
    if (k >= points) {
        throw std::out_of_range("stop_path: index " + std::to_string(k) + " out of range");
    }
    const std::size_t d = p.dim();
    std::vector<double> values(p.values());
    std::vector<double> increments(p.increments());
    for (std::size_t j = k + 1; j < points; ++j) {
        for (std::size_t i = 0; i < d; ++i) values[j * d + i] = values[k * d + i];
    }
    for (std::size_t j = k; j + 1 < points; ++j) {
        for (std::size_t i = 0; i < d; ++i) increments[j * d + i] = 0.0;
    }
    return Path(p.grid_ptr(), d, std::move(values), std::move(increments));
}

Path bump_path(const Path& p, const BumpSpec& b) {
    const std::size_t points = p.grid().size();
    if (b.time_index >= points) {
        throw std::out_of_range("bump_path: time index out of range");
    }
    if (b.coordinate >= p.dim()) {
        throw std::out_of_range("bump_path: coordinate out of range");
    }
    const std::size_t d = p.dim();
    std::vector<double> values(p.values());
    std::vector<double> increments(p.increments());
    for (std::size_t j = b.time_index; j < points; ++j) {
        values[j * d + b.coordinate] += b.magnitude;
    }
    // the perturbation enters the path through the step into t_k only
    if (b.time_index >= 1) {
        increments[(b.time_index - 1) * d + b.coordinate] += b.magnitude;
    }
    return Path(p.grid_ptr(), d, std::move(values), std::move(increments));
}

void write_path_csv(std::ostream& out, const Path& p) {
    out << "t";
    for (std::size_t i = 1; i <= p.dim(); ++i) out << ",w" << i;
    out << "\n";
    for (std::size_t k = 0; k < p.grid().size(); ++k) {
        format_double(out, p.grid()[k]);
        for (std::size_t i = 0; i < p.dim(); ++i) {
            out << ',';
            format_double(out, p.value(k, i));
        }
        out << "\n";
    }
}

namespace {

double parse_double(const std::string& cell, std::size_t line_no) {
    double x = 0.0;
    const char* first = cell.data();
    const char* last = cell.data() + cell.size();
    auto res = std::from_chars(first, last, x);
    if (res.ec != std::errc{} || res.ptr != last) {
        throw std::invalid_argument("path csv: bad number '" + cell + "' on line " +
                                    std::to_string(line_no));
    }
    return x;
}

}  // namespace

Path read_path_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) {
        throw std::invalid_argument("path csv: empty input");
    }
    std::size_t dim = 0;
    {
        std::stringstream header(line);
        std::string cell;
        if (!std::getline(header, cell, ',') || cell != "t") {
            throw std::invalid_argument("path csv: header must start with 't'");
        }
        while (std::getline(header, cell, ',')) ++dim;
        if (dim == 0) throw std::invalid_argument("path csv: no coordinate columns");
    }
    std::vector<double> times;
    std::vector<double> values;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::stringstream row(line);
        std::string cell;
        std::size_t col = 0;
        while (std::getline(row, cell, ',')) {
            const double x = parse_double(cell, line_no);
            if (col == 0) {
                times.push_back(x);
            } else {
                values.push_back(x);
            }
            ++col;
        }
        if (col != dim + 1) {
            throw std::invalid_argument("path csv: wrong column count on line " +
                                        std::to_string(line_no));
        }
    }
    auto grid = std::make_shared<const TimeGrid>(std::move(times));
    return Path::from_values(std::move(grid), dim, std::move(values));
}

}  // namespace fitolab

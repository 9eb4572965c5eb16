#include "dnefc/metrics.hpp"

#include <charconv>
#include <sstream>

#include "dnefc/errors.hpp"

namespace dnefc {

namespace fs = std::filesystem;

std::string format_number(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

std::string format_metrics_row(const GenerationStats& s) {
    std::string row = std::to_string(s.generation);
    for (const double v : {s.best_child, s.mean_child, s.worst_child, s.parent_train_acc}) {
        row += ',';
        row += format_number(v);
    }
    row += ',';
    if (s.test_acc) row += format_number(*s.test_acc);
    return row;
}

GenerationStats parse_metrics_row(const std::string& line) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    if (cells.size() != 6) throw FormatError("metrics row has " + std::to_string(cells.size()) + " fields: " + line);
    const auto num = [&](const std::string& c) {
        double v = 0.0;
        const auto res = std::from_chars(c.data(), c.data() + c.size(), v);
        if (res.ec != std::errc{} || res.ptr != c.data() + c.size()) throw FormatError("bad metrics value '" + c + "'");
        return v;
    };
    GenerationStats s;
    std::size_t gen = 0;
    const auto res = std::from_chars(cells[0].data(), cells[0].data() + cells[0].size(), gen);
    if (res.ec != std::errc{} || res.ptr != cells[0].data() + cells[0].size()) {
        throw FormatError("bad generation index '" + cells[0] + "'");
    }
    s.generation = gen;
    s.best_child = num(cells[1]);
    s.mean_child = num(cells[2]);
    s.worst_child = num(cells[3]);
    s.parent_train_acc = num(cells[4]);
    if (!cells[5].empty()) s.test_acc = num(cells[5]);
    return s;
}

MetricsWriter::MetricsWriter(const fs::path& path) : out_(path, std::ios::app), path_(path) {
    if (!out_) throw IoError("cannot open " + path.string() + " for appending");
}

MetricsWriter MetricsWriter::create(const fs::path& path) {
    {
        std::ofstream out(path, std::ios::trunc);
        if (!out) throw IoError("cannot create " + path.string());
        out << kMetricsHeader << '\n';
        if (!out.flush()) throw IoError("failed writing " + path.string());
    }
    return MetricsWriter(path);
}

MetricsWriter MetricsWriter::resume(const fs::path& path, std::size_t last_generation) {
    std::vector<std::string> kept;
    if (std::ifstream in(path); in) {
        std::string content((std::istreambuf_iterator<char>(in)), {});
        std::size_t start = 0;
        bool first = true;
        while (start < content.size()) {
            const auto nl = content.find('\n', start);
            if (nl == std::string::npos) break; // torn final line
            std::string line = content.substr(start, nl - start);
            start = nl + 1;
            if (first) {
                first = false;
                continue;
            }
            try {
                if (parse_metrics_row(line).generation <= last_generation) kept.push_back(std::move(line));
            } catch (const FormatError&) {
                break;
            }
        }
    }
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::trunc);
        if (!out) throw IoError("cannot create " + tmp.string());
        out << kMetricsHeader << '\n';
        for (const auto& line : kept) out << line << '\n';
        if (!out.flush()) throw IoError("failed writing " + tmp.string());
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) throw IoError("cannot replace " + path.string() + ": " + ec.message());
    return MetricsWriter(path);
}

void MetricsWriter::append(const GenerationStats& s) {
    const std::string row = format_metrics_row(s) + '\n';
    out_.write(row.data(), static_cast<std::streamsize>(row.size()));
    if (!out_.flush()) throw IoError("failed writing " + path_.string());
}

std::vector<GenerationStats> read_metrics(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    std::string line;
    if (!std::getline(in, line) || line != kMetricsHeader) throw FormatError(path.string() + ": missing metrics header");
    std::vector<GenerationStats> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        rows.push_back(parse_metrics_row(line));
    }
    return rows;
}

namespace {

struct Series {
    std::string label;
    std::string color;
    std::vector<double> y;
};

void write_line_chart(const std::vector<std::size_t>& x, const std::vector<Series>& series, const std::string& title,
                      const fs::path& path) {
    constexpr double width = 720, height = 420, left = 60, right = 150, top = 40, bottom = 50;
    const double plot_w = width - left - right;
    const double plot_h = height - top - bottom;
    const double x_max = x.empty() ? 1.0 : static_cast<double>(std::max<std::size_t>(x.back(), 1));
    const auto px = [&](double gx) { return left + plot_w * gx / x_max; };
    const auto py = [&](double acc) { return top + plot_h * (1.0 - acc); };

    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
        << "\" font-family=\"sans-serif\" font-size=\"12\">\n"
        << "<rect width=\"100%\" height=\"100%\" fill=\"#ffffff\"/>\n"
        << "<text x=\"" << left << "\" y=\"24\" font-size=\"15\">" << title << "</text>\n";
    for (int i = 0; i <= 5; ++i) {
        const double acc = i / 5.0;
        out << "<line x1=\"" << left << "\" x2=\"" << left + plot_w << "\" y1=\"" << py(acc) << "\" y2=\"" << py(acc)
            << "\" stroke=\"#dddddd\"/>\n"
            << "<text x=\"" << left - 8 << "\" y=\"" << py(acc) + 4 << "\" text-anchor=\"end\">" << format_number(acc)
            << "</text>\n";
    }
    for (int i = 0; i <= 5; ++i) {
        const double gx = x_max * i / 5.0;
        out << "<text x=\"" << px(gx) << "\" y=\"" << top + plot_h + 18 << "\" text-anchor=\"middle\">"
            << static_cast<long long>(std::llround(gx)) << "</text>\n";
    }
    out << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << plot_w << "\" height=\"" << plot_h
        << "\" fill=\"none\" stroke=\"#333333\"/>\n"
        << "<text x=\"" << left + plot_w / 2 << "\" y=\"" << height - 12 << "\" text-anchor=\"middle\">generation</text>\n"
        << "<text transform=\"translate(16," << top + plot_h / 2 << ") rotate(-90)\" text-anchor=\"middle\">accuracy</text>\n";
    for (std::size_t s = 0; s < series.size(); ++s) {
        out << "<polyline fill=\"none\" stroke=\"" << series[s].color << "\" stroke-width=\"1.5\" points=\"";
        for (std::size_t i = 0; i < x.size(); ++i) out << px(static_cast<double>(x[i])) << ',' << py(series[s].y[i]) << ' ';
        out << "\"/>\n";
        const double ly = top + 16 + 18.0 * static_cast<double>(s);
        out << "<line x1=\"" << left + plot_w + 12 << "\" x2=\"" << left + plot_w + 36 << "\" y1=\"" << ly << "\" y2=\""
            << ly << "\" stroke=\"" << series[s].color << "\" stroke-width=\"2\"/>\n"
            << "<text x=\"" << left + plot_w + 42 << "\" y=\"" << ly + 4 << "\">" << series[s].label << "</text>\n";
    }
    out << "</svg>\n";
    if (!out.flush()) throw IoError("failed writing " + path.string());
}

} // namespace

void write_training_plot(const std::vector<GenerationStats>& stats, const fs::path& path) {
    std::vector<std::size_t> x;
    Series best{"best child", "#d62728", {}}, mean{"mean child", "#1f77b4", {}}, worst{"worst child", "#2ca02c", {}},
        parent{"parent", "#7f7f7f", {}};
    for (const auto& s : stats) {
        x.push_back(s.generation);
        best.y.push_back(s.best_child);
        mean.y.push_back(s.mean_child);
        worst.y.push_back(s.worst_child);
        parent.y.push_back(s.parent_train_acc);
    }
    write_line_chart(x, {best, mean, worst, parent}, "Training set accuracy", path);
}

void write_test_plot(const std::vector<GenerationStats>& stats, const fs::path& path) {
    std::vector<std::size_t> x;
    Series test{"parent (test)", "#9467bd", {}};
    for (const auto& s : stats) {
        if (!s.test_acc) continue;
        x.push_back(s.generation);
        test.y.push_back(*s.test_acc);
    }
    write_line_chart(x, {test}, "Testing set accuracy", path);
}

} // namespace dnefc

#include "nlma/grid_io.hpp"

#include <fstream>
#include <iomanip>
#include <sstream>
#include <vector>

namespace nlma {

namespace {

struct Token {
    std::string text;
    int line;
    int column;
};

[[noreturn]] void bad(const std::string& source, const Token& t, const std::string& what) {
    std::ostringstream os;
    os << source << ':' << t.line << ':' << t.column << ": " << what << " (token '" << t.text << "')";
    throw ValidationError(os.str());
}

std::vector<std::vector<Token>> tokenize(std::istream& in) {
    std::vector<std::vector<Token>> lines;
    std::string line;
    int ln = 0;
    while (std::getline(in, line)) {
        ++ln;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::vector<Token> toks;
        std::size_t pos = 0;
        while (pos < line.size()) {
            while (pos < line.size() && std::isspace(static_cast<unsigned char>(line[pos]))) ++pos;
            if (pos >= line.size() || line[pos] == '#') break;
            std::size_t start = pos;
            while (pos < line.size() && !std::isspace(static_cast<unsigned char>(line[pos]))) ++pos;
            toks.push_back({line.substr(start, pos - start), ln, int(start) + 1});
        }
        if (!toks.empty()) lines.push_back(std::move(toks));
    }
    return lines;
}

double to_double(const std::string& source, const Token& t) {
    std::istringstream is(t.text);
    double x;
    is >> x;
    if (is.fail() || !is.eof()) bad(source, t, "expected a number");
    return x;
}

int to_int(const std::string& source, const Token& t) {
    std::istringstream is(t.text);
    long x;
    is >> x;
    if (is.fail() || !is.eof() || x < 1 || x > (1L << 24)) bad(source, t, "expected a positive integer");
    return int(x);
}

}  // namespace

GridFunction read_grid(std::istream& in, const std::string& source) {
    auto lines = tokenize(in);
    if (lines.size() < 2) throw ValidationError(source + ": missing header lines");
    const auto& head = lines[0];
    int d = to_int(source, head[0]);
    if (d > 3) bad(source, head[0], "dimension must be 1, 2 or 3");
    if (int(head.size()) != 1 + d) bad(source, head.back(), "header needs d followed by d node counts");
    Grid g;
    g.dim = d;
    g.n = {1, 1, 1};
    for (int a = 0; a < d; ++a) g.n[a] = to_int(source, head[1 + a]);
    const auto& box = lines[1];
    if (box.size() != 2) bad(source, box.back(), "second line must be 'L h'");
    g.L = to_double(source, box[0]);
    g.h = to_double(source, box[1]);
    if (!(g.L > 0.0)) bad(source, box[0], "L must be positive");
    if (!(g.h > 0.0)) bad(source, box[1], "spacing must be positive");
    try {
        g.validate();
    } catch (const ValidationError& e) {
        bad(source, box[1], e.what());
    }

    Tail tail;
    std::size_t row = 2;
    while (row < lines.size() && (lines[row][0].text == "cone" || lines[row][0].text == "tail")) {
        const auto& l = lines[row];
        if (l[0].text == "cone") {
            if (l.size() < 2) bad(source, l[0], "cone line needs a model name");
            std::vector<double> params;
            for (std::size_t i = 2; i < l.size(); ++i) params.push_back(to_double(source, l[i]));
            try {
                tail.cone = ConeModel::parse(d, l[1].text, params);
            } catch (const ValidationError& e) {
                bad(source, l[1], e.what());
            }
        } else {
            if (l.size() != 3) bad(source, l[0], "tail line must be 'tail C exponent'");
            to_double(source, l[1]);
            to_double(source, l[2]);
        }
        ++row;
    }

    std::vector<double> values;
    values.reserve(g.size());
    for (; row < lines.size(); ++row) {
        for (const auto& t : lines[row]) {
            if (values.size() == g.size()) bad(source, t, "more values than grid nodes");
            double x = to_double(source, t);
            if (!std::isfinite(x)) bad(source, t, "value must be finite");
            values.push_back(x);
        }
    }
    if (values.size() != g.size()) {
        std::ostringstream os;
        os << source << ": expected " << g.size() << " values, found " << values.size();
        throw ValidationError(os.str());
    }
    return GridFunction(g, std::move(values), std::move(tail));
}

GridFunction read_grid_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open grid file '" + path + "'");
    return read_grid(in, path);
}

void write_grid(std::ostream& out, const GridFunction& f, const TailMetadata& meta) {
    const Grid& g = f.grid();
    out << std::setprecision(17);
    out << g.dim;
    for (int a = 0; a < g.dim; ++a) out << ' ' << g.n[a];
    out << '\n' << g.L << ' ' << g.h << '\n';
    if (f.cone().present()) out << "cone " << f.cone().describe() << '\n';
    if (meta.present) out << "tail " << meta.C << ' ' << meta.exponent << '\n';
    for (double v : f.values()) out << v << '\n';
}

void write_grid_file(const std::string& path, const GridFunction& f, const TailMetadata& meta) {
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot write '" + path + "'");
    write_grid(out, f, meta);
}

}  // namespace nlma

#pragma once

#include "jsqslq/measures.hpp"
#include "jsqslq/stability.hpp"

#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace jsqslq {

enum class TableKind { thresholds, measures, rates };

struct TableRow {
    std::string label;
    ModelParams params;
};

struct TableSpec {
    int number = 0;
    TableKind kind = TableKind::measures;
    std::string title;
    std::vector<TableRow> rows;

    std::vector<std::string> columns() const {
        switch (kind) {
            case TableKind::thresholds:
                return {"lambda_max"};
            case TableKind::measures:
                return {"EL1", "EL2", "EL3", "EW1", "EW2", "EW3", "Cor12", "Cor13", "Cor23", "GI"};
            case TableKind::rates:
                return {"Leff1", "Leff2", "Leff3", "gamma1", "gamma2", "gamma3"};
        }
        return {};
    }
};

namespace detail {

inline ModelParams grid_params(double mu1, double mu2, const Vec3& p, double q1 = 1.0) {
    return validate_params(4.0, Vec3(mu1, mu2, 5.0), p, Vec3(q1, 1.0, 1.0));
}

inline std::vector<TableRow> mu1_rows(double mu2, const Vec3& p, const std::vector<double>& mu1s) {
    std::vector<TableRow> rows;
    for (double m : mu1s) {
        std::ostringstream label;
        label << "mu1=" << m;
        rows.push_back({label.str(), grid_params(m, mu2, p)});
    }
    return rows;
}

inline std::vector<TableRow> q1_rows(double mu1, const Vec3& p) {
    std::vector<TableRow> rows;
    for (double q1 : {1.0, 3.0, 8.0, 13.0, 20.0, 30.0, 100.0}) {
        std::ostringstream label;
        label << "q1=" << q1;
        rows.push_back({label.str(), grid_params(mu1, 3.0, p, q1)});
    }
    return rows;
}

}  // namespace detail

/// The fourteen reference tables: stability thresholds (1), the lambda=4,
/// mu3=5 measure/rate grids over mu1 and mu2 (2..11), and the q1 sweeps
/// (12..14). Tables 8..12 use the near-degenerate p1=0.9999.
inline const std::vector<TableSpec>& table_specs() {
    static const std::vector<TableSpec> specs = [] {
        const Vec3 even(1.0 / 3, 1.0 / 3, 1.0 / 3);
        const Vec3 extreme(0.9999, 0.00005, 0.00005);
        std::vector<TableSpec> t;
        TableSpec t1;
        t1.number = 1;
        t1.kind = TableKind::thresholds;
        t1.title = "stability thresholds in lambda for mu=(4,5,6), q=(1,1,1)";
        t1.rows = {
            {"p=(1/3 1/3 1/3)", validate_params(1.0, Vec3(4, 5, 6), even, Vec3::Ones())},
            {"p=(0.2 0.3 0.5)", validate_params(1.0, Vec3(4, 5, 6), Vec3(0.2, 0.3, 0.5), Vec3::Ones())},
            {"p=(0.05 0.05 0.9)", validate_params(1.0, Vec3(4, 5, 6), Vec3(0.05, 0.05, 0.9), Vec3::Ones())},
            {"p=(0.9 0.05 0.05)", validate_params(1.0, Vec3(4, 5, 6), Vec3(0.9, 0.05, 0.05), Vec3::Ones())},
        };
        t.push_back(t1);

        auto add = [&](int number, TableKind kind, std::string title, std::vector<TableRow> rows) {
            TableSpec s;
            s.number = number;
            s.kind = kind;
            s.title = std::move(title);
            s.rows = std::move(rows);
            t.push_back(std::move(s));
        };
        const std::vector<double> mu2_3 = {4.5, 5, 10, 30};
        const std::vector<double> mu2_4 = {3.3, 3.4, 3.5, 4, 4.5, 5, 10, 30};
        const std::vector<double> mu2_5 = {2.75, 3, 3.4, 3.5, 4, 4.5, 5, 10, 30};
        add(2, TableKind::measures, "means, waits, correlations: lambda=4, mu2=3, mu3=5, p=1/3, q=1",
            detail::mu1_rows(3, even, mu2_3));
        add(3, TableKind::rates, "effective rates and server residence: lambda=4, mu2=3, mu3=5, p=1/3, q=1",
            detail::mu1_rows(3, even, mu2_3));
        add(4, TableKind::measures, "means, waits, correlations: lambda=4, mu2=4, mu3=5, p=1/3, q=1",
            detail::mu1_rows(4, even, mu2_4));
        add(5, TableKind::measures, "means, waits, correlations: lambda=4, mu2=5, mu3=5, p=1/3, q=1",
            detail::mu1_rows(5, even, mu2_5));
        add(6, TableKind::rates, "effective rates and server residence: lambda=4, mu2=5, mu3=5, p=1/3, q=1",
            detail::mu1_rows(5, even, mu2_5));
        add(7, TableKind::rates, "effective rates and server residence: lambda=4, mu2=4, mu3=5, p=1/3, q=1",
            detail::mu1_rows(4, even, mu2_4));
        add(8, TableKind::measures, "means, waits, correlations: lambda=4, mu2=3, mu3=5, p1=0.9999, q=1",
            detail::mu1_rows(3, extreme, {4.2, 4.5, 5, 10, 30}));
        add(9, TableKind::rates, "effective rates and server residence: lambda=4, mu2=3, mu3=5, p1=0.9999, q=1",
            detail::mu1_rows(3, extreme, {4.2, 4.5, 5, 10, 30}));
        add(10, TableKind::measures, "means, waits, correlations: lambda=4, mu2=4, mu3=5, p1=0.9999, q=1",
            detail::mu1_rows(4, extreme, {3.7, 4, 4.5, 5, 10, 30}));
        add(11, TableKind::measures, "means, waits, correlations: lambda=4, mu2=5, mu3=5, p1=0.9999, q=1",
            detail::mu1_rows(5, extreme, {3.4, 3.5, 4, 4.5, 5, 10, 30}));
        add(12, TableKind::rates, "effective rates and server residence over q1: lambda=4, mu1=4.2, mu2=3, mu3=5, p1=0.9999",
            detail::q1_rows(4.2, extreme));
        add(13, TableKind::measures, "means, waits, correlations over q1: lambda=4, mu1=4.5, mu2=3, mu3=5, p=1/3",
            detail::q1_rows(4.5, even));
        add(14, TableKind::rates, "effective rates and server residence over q1: lambda=4, mu1=4.5, mu2=3, mu3=5, p=1/3",
            detail::q1_rows(4.5, even));
        return t;
    }();
    return specs;
}

inline const TableSpec& table_spec(int number) {
    for (const auto& s : table_specs())
        if (s.number == number) return s;
    fail(errc::invalid_config, "no table " + std::to_string(number));
}

// ---------------------------------------------------------------------------
// fixtures and comparison

inline double round_half_away(double x, int decimals) {
    double scale = std::pow(10.0, decimals);
    return std::floor(std::abs(x) * scale + 0.5) / scale * (x < 0.0 ? -1.0 : 1.0);
}

inline std::string format_cell(double x, int decimals) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", decimals, round_half_away(x, decimals));
    return buf;
}

inline int printed_decimals(const std::string& cell) {
    auto dot = cell.find('.');
    return dot == std::string::npos ? 0 : static_cast<int>(cell.size() - dot - 1);
}

struct Fixture {
    std::vector<std::string> columns;
    std::vector<std::string> labels;
    std::vector<std::vector<std::string>> cells;
};

namespace detail {

inline std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (ch != '\r') {
            cur += ch;
        }
    }
    out.push_back(cur);
    return out;
}

}  // namespace detail

inline Fixture load_fixture(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(errc::fixture_error, "cannot open fixture " + path);
    Fixture fx;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        auto cells = detail::split_csv(line);
        if (fx.columns.empty()) {
            fx.columns.assign(cells.begin() + 1, cells.end());
        } else {
            fx.labels.push_back(cells.front());
            fx.cells.emplace_back(cells.begin() + 1, cells.end());
        }
    }
    if (fx.columns.empty()) fail(errc::fixture_error, "fixture has no header: " + path);
    return fx;
}

struct Erratum {
    int table = 0;
    std::string row_label;
    std::string column;
    double printed = 0.0;
    double corrected = 0.0;
};

inline std::vector<Erratum> load_errata(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(errc::fixture_error, "cannot open errata file " + path);
    std::vector<Erratum> out;
    std::string line;
    bool header = true;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        if (header) {
            header = false;
            continue;
        }
        auto cells = detail::split_csv(line);
        if (cells.size() < 5) fail(errc::fixture_error, "bad errata row: " + line);
        out.push_back({std::stoi(cells[0]), cells[1], cells[2], std::stod(cells[3]), std::stod(cells[4])});
    }
    return out;
}

struct CellCheck {
    int row = 0;
    int col = 0;
    std::string column;
    double computed = 0.0;
    std::string printed;
    enum class Status { exact, within_ulp, erratum, mismatch } status = Status::mismatch;
    double corrected = 0.0;  // meaningful for erratum cells
};

struct TableResult {
    int number = 0;
    std::vector<std::vector<double>> values;  // computed, full precision
    std::vector<CellCheck> checks;
    int mismatches = 0;
    int errata_cells = 0;
    int ulp_cells = 0;
};

/// Computes one table row at full precision. For measure tables the Gini cell
/// is derived from the three means rounded at the printed precision of the
/// mean cells, which is how the reference tables' own GI column was built.
inline std::vector<double> computed_row(const TableSpec& spec, size_t row,
                                        const std::vector<std::string>& printed_cells) {
    const ModelParams& prm = spec.rows[row].params;
    switch (spec.kind) {
        case TableKind::thresholds: {
            double th = threshold_lambda(prm.mu, prm.p, prm.q, 1e-6, 0.0, 1e-7);
            return {th};
        }
        case TableKind::measures: {
            PerformanceReport rep = compute_report(solve_mg(prm), prm);
            Vec3 rounded;
            for (int i = 0; i < 3; ++i) {
                int d = i < static_cast<int>(printed_cells.size()) ? printed_decimals(printed_cells[static_cast<size_t>(i)]) : 2;
                rounded[i] = round_half_away(rep.mean_l[i], d);
            }
            return {rep.mean_l[0], rep.mean_l[1], rep.mean_l[2],
                    rep.mean_w[0], rep.mean_w[1], rep.mean_w[2],
                    rep.cor[0],    rep.cor[1],    rep.cor[2],
                    gini(rounded)};
        }
        case TableKind::rates: {
            PerformanceReport rep = compute_report(solve_mg(prm), prm);
            return {rep.lambda_eff[0], rep.lambda_eff[1], rep.lambda_eff[2],
                    rep.gamma[0],      rep.gamma[1],      rep.gamma[2]};
        }
    }
    return {};
}

/// Recomputes table `number` and grades every cell against the bundled
/// expected values. Cells listed in the errata file are graded against their
/// corrected value instead and reported separately.
inline TableResult reproduce_table(int number, const std::string& fixtures_dir,
                                   bool ulp_tolerance) {
    const TableSpec& spec = table_spec(number);
    char name[32];
    std::snprintf(name, sizeof name, "/table%02d.csv", number);
    Fixture fx = load_fixture(fixtures_dir + name);
    std::vector<Erratum> errata = load_errata(fixtures_dir + "/errata.csv");
    if (fx.labels.size() != spec.rows.size())
        fail(errc::fixture_error, "fixture row count mismatch for table " + std::to_string(number));

    TableResult result;
    result.number = number;
    for (size_t r = 0; r < spec.rows.size(); ++r) {
        std::vector<double> vals = computed_row(spec, r, fx.cells[r]);
        result.values.push_back(vals);
        for (size_t c = 0; c < vals.size(); ++c) {
            CellCheck check;
            check.row = static_cast<int>(r);
            check.col = static_cast<int>(c);
            check.column = spec.columns()[c];
            check.computed = vals[c];
            check.printed = fx.cells[r][c];
            const Erratum* known = nullptr;
            for (const auto& e : errata)
                if (e.table == number && e.row_label == spec.rows[r].label && e.column == check.column)
                    known = &e;
            int d = printed_decimals(check.printed);
            double printed_value = std::stod(check.printed);
            if (known) {
                check.corrected = known->corrected;
                bool ok = std::abs(vals[c] - known->corrected) <=
                          1e-6 * std::max(1.0, std::abs(known->corrected));
                check.status = ok ? CellCheck::Status::erratum : CellCheck::Status::mismatch;
            } else if (format_cell(vals[c], d) == check.printed) {
                check.status = CellCheck::Status::exact;
            } else if (ulp_tolerance &&
                       std::abs(vals[c] - printed_value) <= std::pow(10.0, -d) * (1.0 + 1e-9)) {
                check.status = CellCheck::Status::within_ulp;
            } else {
                check.status = CellCheck::Status::mismatch;
            }
            if (check.status == CellCheck::Status::mismatch) ++result.mismatches;
            if (check.status == CellCheck::Status::erratum) ++result.errata_cells;
            if (check.status == CellCheck::Status::within_ulp) ++result.ulp_cells;
            result.checks.push_back(std::move(check));
        }
    }
    return result;
}

inline std::string default_fixtures_dir() {
#ifdef JSQSLQ_FIXTURES
    return JSQSLQ_FIXTURES;
#else
    return "fixtures";
#endif
}

}  // namespace jsqslq

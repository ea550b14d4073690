// htdmc: exponent/simulation toolkit for distributed hypothesis testing over
// a discrete memoryless channel. JSON in, JSON/CSV out, deterministic bytes
// for identical inputs and flags.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "htdmc/example1.hpp"
#include "htdmc/exponents.hpp"
#include "htdmc/npsim.hpp"

using nlohmann::json;
using namespace htdmc;

namespace {

constexpr int kExitValidation = 2;
constexpr int kExitPrecondition = 3;
constexpr int kExitGuard = 4;

json num_or_inf(double v) {
    if (std::isinf(v)) return v > 0 ? json("infinity") : json("-infinity");
    return json(v);
}

json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open file: " + path);
    json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw ValidationError("invalid JSON in " + path + ": " + e.what());
    }
    return j;
}

void check_matrix(const json& m, const std::string& name, size_t rows, size_t cols,
                  bool stochastic_rows) {
    if (!m.is_array() || m.size() != rows)
        throw ValidationError(name + ": expected " + std::to_string(rows) + " rows");
    double total = 0.0;
    for (size_t r = 0; r < rows; ++r) {
        if (!m[r].is_array() || m[r].size() != cols)
            throw ValidationError(name + " row " + std::to_string(r) + ": expected " +
                                  std::to_string(cols) + " entries");
        double row_sum = 0.0;
        for (size_t c = 0; c < cols; ++c) {
            if (!m[r][c].is_number())
                throw ValidationError(name + "[" + std::to_string(r) + "][" + std::to_string(c) +
                                      "]: not a number");
            const double v = m[r][c].get<double>();
            if (v < -1e-12 || v > 1.0 + 1e-12)
                throw ValidationError(name + "[" + std::to_string(r) + "][" + std::to_string(c) +
                                      "] = " + std::to_string(v) + " outside [0,1]");
            row_sum += v;
        }
        if (stochastic_rows && std::fabs(row_sum - 1.0) > 1e-9)
            throw ValidationError(name + " row " + std::to_string(r) + ": sums to " +
                                  std::to_string(row_sum) + ", expected 1");
        total += row_sum;
    }
    if (!stochastic_rows && std::fabs(total - 1.0) > 1e-9)
        throw ValidationError(name + ": total mass " + std::to_string(total) + ", expected 1");
}

std::vector<std::vector<double>> matrix_of(const json& m) {
    std::vector<std::vector<double>> out;
    for (const auto& row : m) out.push_back(row.get<std::vector<double>>());
    return out;
}

int alphabet_size(const json& j, const std::string& key) {
    if (!j.contains("alphabets") || !j["alphabets"].contains(key) ||
        !j["alphabets"][key].is_number_integer())
        throw ValidationError("missing integer alphabets." + key);
    const int n = j["alphabets"][key].get<int>();
    if (n < 1 || n > kMaxAlphabet)
        throw ValidationError("alphabets." + key + " outside [1," + std::to_string(kMaxAlphabet) + "]");
    return n;
}

CondDist load_channel_matrix(const json& j) {
    const int nx = alphabet_size(j, "X"), ny = alphabet_size(j, "Y");
    if (!j.contains("channel")) throw ValidationError("missing channel matrix");
    check_matrix(j["channel"], "channel", nx, ny, true);
    return CondDist({"X", nx}, {"Y", ny}, matrix_of(j["channel"]));
}

ht::HTInstance load_problem(const std::string& path) {
    json j = load_json_file(path);
    if (!j.contains("schema") || j["schema"] != "1")
        throw ValidationError(path + ": missing or unsupported schema (want \"1\")");
    const int nu = alphabet_size(j, "U"), nv = alphabet_size(j, "V");
    if (!j.contains("P_UV") || !j.contains("Q_UV")) throw ValidationError("missing P_UV or Q_UV");
    check_matrix(j["P_UV"], "P_UV", nu, nv, false);
    check_matrix(j["Q_UV"], "Q_UV", nu, nv, false);
    ht::HTInstance inst{JointDist::from_matrix({"U", nu}, {"V", nv}, matrix_of(j["P_UV"])),
                        JointDist::from_matrix({"U", nu}, {"V", nv}, matrix_of(j["Q_UV"])),
                        load_channel_matrix(j), 1.0, std::nullopt};
    if (j.contains("tau")) {
        if (!j["tau"].is_number() || j["tau"].get<double>() < 0.0)
            throw ValidationError("tau must be a number >= 0");
        inst.tau = j["tau"].get<double>();
    }
    if (j.contains("v_factorization")) {
        const auto& f = j["v_factorization"];
        if (!f.contains("E") || !f.contains("Z"))
            throw ValidationError("v_factorization needs E and Z sizes");
        inst.v_factor = std::make_pair(f["E"].get<int>(), f["Z"].get<int>());
        if (inst.v_factor->first * inst.v_factor->second != nv)
            throw ValidationError("v_factorization: |E|*|Z| != |V|");
    }
    inst.validate();
    return inst;
}

json dist_json(const FiniteDist& d) { return json(d.probs()); }

json cond_json(const CondDist& c) {
    json rows = json::array();
    for (int r = 0; r < c.from().size; ++r) rows.push_back(c.row(r).probs());
    return rows;
}

json input_json(const chan::InputDist& in) {
    return json{{"P_S", dist_json(in.p_s)}, {"P_X_given_S", cond_json(in.p_x_given_s)}};
}

json report_json(const ht::ExponentReport& rep, const std::string& units) {
    json j;
    j["scheme"] = rep.scheme;
    j["value_nats"] = num_or_inf(rep.value_nats);
    j["value_bits"] = num_or_inf(rep.value_bits());
    j["value"] = num_or_inf(units == "bits" ? rep.value_bits() : rep.value_nats);
    j["exact"] = rep.exact;
    j["no_feasible_point"] = rep.no_feasible_point;
    if (!rep.notes.empty()) j["notes"] = rep.notes;
    json diag;
    diag["points_visited"] = rep.points_visited;
    diag["points_feasible"] = rep.points_feasible;
    j["diagnostics"] = diag;

    json ach;
    if (rep.w_given_u) ach["P_W_given_U"] = cond_json(*rep.w_given_u);
    if (rep.input) ach["P_SX"] = input_json(*rep.input);
    if (rep.rate_nats >= 0.0) {
        ach["rate_nats"] = rep.rate_nats;
        ach["rate_bits"] = info::nats_to_bits(rep.rate_nats);
    }
    if (rep.jhtcc_params) {
        ach["P_S"] = dist_json(rep.jhtcc_params->p_s);
        ach["P_Wbar_given_US"] = cond_json(rep.jhtcc_params->wbar_given_us);
        ach["P_Xprime_given_US"] = cond_json(rep.jhtcc_params->xp_given_us);
        ach["P_X_given_USWbar"] = cond_json(rep.jhtcc_params->x_given_uswbar);
    }
    if (!ach.empty()) j["achieving"] = ach;

    if (rep.shtcc_terms) {
        const auto& t = *rep.shtcc_terms;
        j["breakdown"] = json{{"E1", num_or_inf(t.e1)},
                              {"E2", num_or_inf(t.e2)},
                              {"E3", num_or_inf(t.e3)},
                              {"E4", num_or_inf(t.e4)},
                              {"feasible", t.feasible},
                              {"I_UW", t.i_uw},
                              {"I_UW_given_V", t.i_uw_v},
                              {"I_VW", t.i_vw},
                              {"I_XY_given_S", t.i_xy_s},
                              {"E_x", num_or_inf(t.ex)},
                              {"E_m", num_or_inf(t.em)}};
    }
    if (rep.jhtcc_terms) {
        const auto& t = *rep.jhtcc_terms;
        j["breakdown"] = json{{"E1p", num_or_inf(t.e1)},
                              {"E2p", num_or_inf(t.e2)},
                              {"E3p", num_or_inf(t.e3)},
                              {"feasible", t.feasible},
                              {"degenerate_analog", t.degenerate_analog},
                              {"I_UWbar_given_S", t.i_uw_s},
                              {"I_Wbar_VY_given_S", t.i_wvy_s}};
    }
    if (rep.onebit_parts) {
        const auto& t = *rep.onebit_parts;
        j["breakdown"] = json{{"beta0", num_or_inf(t.beta0)},
                              {"E_c", num_or_inf(t.ec)},
                              {"D_PV_QV", num_or_inf(t.d_pv_qv)}};
    }
    return j;
}

void emit(const json& j, const std::string& out_path) {
    const std::string text = j.dump(2) + "\n";
    if (out_path.empty()) {
        std::cout << text;
    } else {
        std::ofstream out(out_path, std::ios::binary);
        if (!out) throw ValidationError("cannot write " + out_path);
        out << text;
    }
}

void emit_text(const std::string& text, const std::string& out_path) {
    if (out_path.empty()) {
        std::cout << text;
    } else {
        std::ofstream out(out_path, std::ios::binary);
        if (!out) throw ValidationError("cannot write " + out_path);
        out << text;
    }
}

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

struct CommonFlags {
    double grid_step = 0.05;
    int w_card = 0;
    int r_grid = 40;
    int refine_rounds = 2;
    int s_card = 0;
    int threads = 1;
    uint64_t seed = 0;
    std::string units = "bits";
    std::string out;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
    cmd->add_option("--grid-step", f.grid_step, "simplex grid step")->check(CLI::Range(1e-4, 0.5));
    cmd->add_option("--w-card", f.w_card, "auxiliary |W| (0: |U|+1)");
    cmd->add_option("--r-grid", f.r_grid, "rate grid points");
    cmd->add_option("--refine-rounds", f.refine_rounds, "local refinement rounds");
    cmd->add_option("--s-card", f.s_card, "time-sharing support size (0: default)");
    cmd->add_option("--threads", f.threads, "worker cap")->check(CLI::Range(1, 64));
    cmd->add_option("--seed", f.seed, "seed echoed into reports");
    cmd->add_option("--units", f.units, "headline value units")
        ->check(CLI::IsMember({"bits", "nats"}));
    cmd->add_option("--out", f.out, "output path (default: stdout)");
}

ht::SearchConfig config_of(const CommonFlags& f) {
    ht::SearchConfig cfg;
    cfg.grid_step = f.grid_step;
    cfg.w_card = f.w_card;
    cfg.r_grid = f.r_grid;
    cfg.refine_rounds = f.refine_rounds;
    cfg.s_card = f.s_card;
    cfg.threads = f.threads;
    return cfg;
}

json echo_config(const CommonFlags& f) {
    return json{{"grid_step", f.grid_step}, {"w_card", f.w_card},
                {"r_grid", f.r_grid},       {"refine_rounds", f.refine_rounds},
                {"s_card", f.s_card},       {"threads", f.threads}};
}

int run_exponent(const std::string& scheme, const std::string& problem, const CommonFlags& f) {
    ht::HTInstance inst = load_problem(problem);
    ht::SearchConfig cfg = config_of(f);
    ht::ExponentReport rep;
    if (scheme == "shtcc") {
        rep = ht::shtcc_exponent(inst, cfg);
    } else if (scheme == "jhtcc") {
        rep = ht::jhtcc_exponent(inst, cfg);
    } else if (scheme == "onebit") {
        rep = ht::onebit_exponent(inst);
    } else if (scheme == "taci") {
        rep = ht::taci_exponent(inst, cfg);
    } else if (scheme == "uncoded") {
        rep.scheme = "uncoded";
        rep.value_nats = ht::uncoded_exponent(inst);
    } else if (scheme == "k1") {
        rep.scheme = "k1";
        rep.value_nats = ht::multiletter_k1(inst, cfg.grid_step);
    } else if (scheme == "zerocap") {
        rep.scheme = "zerocap";
        rep.value_nats = ht::zero_capacity_exponent(inst);
        rep.exact = true;
    } else {
        throw ValidationError("unknown scheme: " + scheme);
    }
    json j = report_json(rep, f.units);
    j["command"] = "exponent";
    j["problem"] = problem;
    j["config"] = echo_config(f);
    j["seed"] = f.seed;
    j["units"] = f.units;
    emit(j, f.out);
    return 0;
}

int run_repro(const std::string& target, const CommonFlags& f) {
    if (target == "example1") {
        ht::Example1Report rep = ht::example1_report(config_of(f));
        json j;
        j["command"] = "repro";
        j["target"] = "example1";
        j["config"] = echo_config(f);
        j["seed"] = f.seed;
        j["units"] = "bits";
        j["uncoded_bits"] = rep.uncoded_bits;
        j["ceiling_bits"] = rep.ceiling_bits;
        j["branch2_bound_bits"] = rep.branch2_bound_bits;
        j["shtcc_bits"] = rep.shtcc_bits;
        j["uncoded_ok"] = rep.uncoded_ok;
        j["ceiling_ok"] = rep.ceiling_ok;
        j["branch2_ok"] = rep.branch2_ok;
        j["shtcc_ok"] = rep.shtcc_ok;
        j["landmarks"] = json{{"uncoded", ht::kExample1UncodedBits},
                              {"ceiling", ht::kExample1CeilingBits},
                              {"branch2_bound", ht::kExample1Branch2Bits}};
        j["shtcc_report"] = report_json(rep.shtcc, "bits");
        emit(j, f.out);
        return 0;
    }
    if (target == "fig2") {
        auto curve = ht::fig2_curve();
        std::ostringstream csv;
        csv << "r,f_prime_bits\n";
        for (const auto& [r, fp] : curve) csv << fmt(r) << "," << fmt(fp) << "\n";
        emit_text(csv.str(), f.out);
        return 0;
    }
    throw ValidationError("unknown repro target: " + target);
}

int run_channel(const std::string& quantity, const std::string& channel_path, double rate,
                const std::string& input_path, double tol, double band_tol, const CommonFlags& f) {
    json cj = load_json_file(channel_path);
    CondDist channel = load_channel_matrix(cj);
    const double rate_nats = f.units == "bits" ? info::bits_to_nats(rate) : rate;

    std::optional<chan::InputDist> input;
    if (!input_path.empty()) {
        json ij = load_json_file(input_path);
        if (!ij.contains("P_S") || !ij.contains("P_X_given_S"))
            throw ValidationError("input-dist file needs P_S and P_X_given_S");
        const int nx = channel.from().size;
        check_matrix(ij["P_X_given_S"], "P_X_given_S", nx, nx, true);
        auto ps = ij["P_S"].get<std::vector<double>>();
        input = chan::InputDist{FiniteDist(channel.from(), ps),
                                CondDist(channel.from(), channel.from(), matrix_of(ij["P_X_given_S"]))};
    }

    json j;
    j["command"] = "channel";
    j["quantity"] = quantity;
    j["channel_file"] = channel_path;
    j["seed"] = f.seed;
    j["units"] = f.units;
    j["config"] = json{{"rate", rate}, {"tol", tol}, {"band_tol", band_tol},
                       {"grid_step", f.grid_step}};

    double value = 0.0;
    if (quantity == "capacity") {
        auto [c, px] = chan::capacity(channel, tol);
        value = c;
        j["optimizer"] = json{{"P_X", dist_json(px)}};
    } else if (quantity == "expurgated") {
        chan::ChannelExponentValue v =
            input ? chan::expurgated_fixed(rate_nats, *input, channel)
                  : chan::expurgated_free(rate_nats, channel, f.grid_step);
        value = v.value_nats;
        json opt{{"rho", v.rho}, {"rho_at_limit", v.rho_at_limit}};
        if (v.input) opt["P_SX"] = input_json(*v.input);
        j["optimizer"] = opt;
    } else if (quantity == "redalert") {
        chan::ChannelExponentValue v = input
                                           ? chan::red_alert_fixed(*input, channel)
                                           : chan::red_alert_max(rate_nats, channel, band_tol,
                                                                 f.grid_step);
        if (!v.feasible) {
            j["feasible"] = false;
            j["value"] = "no feasible input on the rate band";
            emit(j, f.out);
            return 0;
        }
        value = v.value_nats;
        if (v.input) j["optimizer"] = json{{"P_SX", input_json(*v.input)}};
    } else if (quantity == "ec") {
        value = chan::max_pair_divergence(channel);
    } else {
        throw ValidationError("unknown channel quantity: " + quantity);
    }
    j["value_nats"] = num_or_inf(value);
    j["value_bits"] = num_or_inf(info::nats_to_bits(value));
    j["value"] = num_or_inf(f.units == "bits" ? info::nats_to_bits(value) : value);
    emit(j, f.out);
    return 0;
}

int run_simulate(const std::string& problem, const std::string& scheme,
                 const std::string& n_list_str, double eps, double bin_width, int64_t trials,
                 const std::string& csv_out, const CommonFlags& f) {
    ht::HTInstance inst = load_problem(problem);
    if (!(eps > 0.0 && eps < 1.0)) throw ValidationError("--eps must be in (0,1)");

    sim::PairSource src{inst.p_uv, inst.q_uv};
    if (scheme == "uncoded") {
        const Alphabet u_ab = inst.p_uv.axes()[0];
        if (u_ab.size != inst.channel.from().size)
            throw PreconditionError("simulate uncoded: |U| must equal |X|");
        CondDist embed = ht::identity_channel(u_ab, inst.channel.from());
        auto through = [&](const JointDist& jd) {
            return jd.compose(embed, {"U"}).compose(inst.channel, {"X"}).marginalize({"V", "Y"});
        };
        src = sim::PairSource{through(inst.p_uv), through(inst.q_uv)};
    } else if (scheme != "centralized") {
        throw ValidationError("unknown simulate scheme: " + scheme);
    }

    std::vector<int> n_list;
    {
        std::stringstream ss(n_list_str);
        std::string tok;
        while (std::getline(ss, tok, ',')) {
            try {
                n_list.push_back(std::stoi(tok));
            } catch (...) {
                throw ValidationError("bad n-list entry: " + tok);
            }
        }
    }

    sim::ErrorCurve curve = sim::stein_slope(src, n_list, eps, bin_width);

    std::ostringstream csv;
    csv << "n,alpha,beta_lo,beta_hi,slope_nats\n";
    for (size_t i = 0; i < curve.n.size(); ++i)
        csv << curve.n[i] << "," << fmt(curve.alpha[i]) << "," << fmt(curve.beta_lo[i]) << ","
            << fmt(curve.beta_hi[i]) << "," << fmt(curve.slope_at_n[i]) << "\n";
    emit_text(csv.str(), csv_out);

    json j;
    j["command"] = "simulate";
    j["problem"] = problem;
    j["scheme"] = scheme;
    j["config"] = json{{"n_list", n_list}, {"eps", eps}, {"bin_width", bin_width},
                       {"trials", trials}};
    j["seed"] = f.seed;
    j["units"] = f.units;
    j["csv"] = csv_out.empty() ? "(stdout)" : csv_out;
    j["slope_nats"] = curve.slope_nats;
    j["slope_bits"] = info::nats_to_bits(curve.slope_nats);
    j["intercept"] = curve.intercept;
    j["kl_oracle_nats"] = curve.kl_oracle_nats;
    j["relative_gap"] =
        curve.kl_oracle_nats > 0.0
            ? std::fabs(curve.slope_nats - curve.kl_oracle_nats) / curve.kl_oracle_nats
            : 0.0;
    j["residuals"] = curve.residuals;
    if (trials > 0) {
        json mcs = json::array();
        for (int n : n_list) {
            sim::McResult mc = sim::mc_np_errors(src, n, eps, trials, f.seed, bin_width);
            json mj{{"n", n}, {"skipped", mc.skipped}};
            if (mc.skipped) {
                mj["note"] = mc.note;
            } else {
                mj["alpha_hat"] = mc.alpha_hat;
                mj["alpha_radius"] = mc.alpha_radius;
                mj["beta_hat"] = mc.beta_hat;
                mj["beta_radius"] = mc.beta_radius;
            }
            mcs.push_back(mj);
        }
        j["mc"] = mcs;
    }
    emit(j, f.out);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"finite-alphabet error exponents for hypothesis testing over a DMC"};
    app.require_subcommand(1);

    CommonFlags f;

    auto* exp_cmd = app.add_subcommand("exponent", "compute an achievable exponent");
    std::string scheme, problem;
    exp_cmd->add_option("scheme", scheme, "shtcc|jhtcc|onebit|taci|uncoded|k1|zerocap")
        ->required()
        ->check(CLI::IsMember({"shtcc", "jhtcc", "onebit", "taci", "uncoded", "k1", "zerocap"}));
    exp_cmd->add_option("problem", problem, "problem JSON file")->required();
    add_common(exp_cmd, f);

    auto* repro_cmd = app.add_subcommand("repro", "reproduce the built-in example or the curve");
    std::string target;
    repro_cmd->add_option("target", target, "example1|fig2")
        ->required()
        ->check(CLI::IsMember({"example1", "fig2"}));
    add_common(repro_cmd, f);

    auto* sim_cmd = app.add_subcommand("simulate", "exact NP error curves at finite blocklength");
    std::string sim_problem, sim_scheme = "centralized", n_list = "50,100,200,400";
    double eps = 0.25, bin_width = 1e-4;
    int64_t trials = 0;
    std::string csv_out;
    sim_cmd->add_option("problem", sim_problem, "problem JSON file")->required();
    sim_cmd->add_option("--scheme", sim_scheme, "centralized|uncoded")
        ->check(CLI::IsMember({"centralized", "uncoded"}));
    sim_cmd->add_option("--n-list", n_list, "comma-separated blocklengths");
    sim_cmd->add_option("--eps", eps, "type-I error budget");
    sim_cmd->add_option("--bin-width", bin_width, "LLR lattice width in nats");
    sim_cmd->add_option("--trials", trials, "Monte Carlo trials (0: off)");
    sim_cmd->add_option("--csv-out", csv_out, "CSV path (default: stdout)");
    add_common(sim_cmd, f);

    auto* chan_cmd = app.add_subcommand("channel", "channel-side quantities");
    std::string quantity, channel_path, input_path;
    double rate = 0.0, tol = 1e-9, band_tol = 1e-3;
    chan_cmd->add_option("quantity", quantity, "capacity|expurgated|redalert|ec")
        ->required()
        ->check(CLI::IsMember({"capacity", "expurgated", "redalert", "ec"}));
    chan_cmd->add_option("channel", channel_path, "channel JSON file")->required();
    chan_cmd->add_option("--rate", rate, "rate (in --units) for expurgated/redalert");
    chan_cmd->add_option("--input-dist", input_path, "P_SX JSON file (fixed-input variants)");
    chan_cmd->add_option("--tol", tol, "capacity certification gap (nats)");
    chan_cmd->add_option("--band-tol", band_tol, "rate-equality band for redalert (nats)");
    add_common(chan_cmd, f);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitValidation;
    }

    try {
        if (exp_cmd->parsed()) return run_exponent(scheme, problem, f);
        if (repro_cmd->parsed()) return run_repro(target, f);
        if (sim_cmd->parsed())
            return run_simulate(sim_problem, sim_scheme, n_list, eps, bin_width, trials, csv_out, f);
        if (chan_cmd->parsed())
            return run_channel(quantity, channel_path, rate, input_path, tol, band_tol, f);
    } catch (const PreconditionError& e) {
        std::cerr << "precondition error: " << e.what() << "\n";
        return kExitPrecondition;
    } catch (const GuardError& e) {
        std::cerr << "guard error: " << e.what() << "\n";
        return kExitGuard;
    } catch (const ValidationError& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    }
    return 0;
}

#include "sfrl/serialize.hpp"

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace sfrl {

namespace {

std::vector<double> flatten(const Eigen::MatrixXd& m) {
    std::vector<double> out;
    out.reserve(m.size());
    for (int r = 0; r < m.rows(); ++r)
        for (int c = 0; c < m.cols(); ++c) out.push_back(m(r, c));
    return out;
}

Eigen::MatrixXd unflatten(const std::vector<double>& data, int rows, int cols) {
    if (static_cast<int>(data.size()) != rows * cols)
        throw std::invalid_argument("serialize: matrix payload size mismatch");
    Eigen::MatrixXd m(rows, cols);
    std::size_t i = 0;
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) m(r, c) = data[i++];
    return m;
}

}  // namespace

Json mdp_to_json(const TabularMdp& mdp) {
    Json j;
    j["num_states"] = mdp.num_states;
    j["num_actions"] = mdp.num_actions;
    j["gamma"] = mdp.gamma;
    j["reward_bound"] = mdp.reward_bound;
    j["transitions"] = Json::array();
    j["rewards"] = Json::array();
    for (int a = 0; a < mdp.num_actions; ++a) {
        j["transitions"].push_back(flatten(mdp.transitions[a]));
        j["rewards"].push_back(
            std::vector<double>(mdp.rewards[a].data(), mdp.rewards[a].data() + mdp.num_states));
    }
    return j;
}

TabularMdp mdp_from_json(const Json& j) {
    TabularMdp mdp;
    mdp.num_states = j.at("num_states").get<int>();
    mdp.num_actions = j.at("num_actions").get<int>();
    mdp.gamma = j.at("gamma").get<double>();
    mdp.reward_bound = j.value("reward_bound", 1.0);
    for (int a = 0; a < mdp.num_actions; ++a) {
        mdp.transitions.push_back(unflatten(j.at("transitions").at(a).get<std::vector<double>>(),
                                            mdp.num_states, mdp.num_states));
        auto r = j.at("rewards").at(a).get<std::vector<double>>();
        mdp.rewards.push_back(Eigen::Map<Eigen::VectorXd>(r.data(), r.size()));
    }
    mdp.validate();
    return mdp;
}

Json representation_to_json(const StateRepresentation& phi) {
    Json j;
    j["num_states"] = static_cast<int>(phi.phi.rows());
    j["n"] = phi.n();
    j["phi"] = flatten(phi.phi);
    return j;
}

StateRepresentation representation_from_json(const Json& j) {
    StateRepresentation phi;
    phi.phi = unflatten(j.at("phi").get<std::vector<double>>(), j.at("num_states").get<int>(),
                        j.at("n").get<int>());
    return phi;
}

namespace {

Json model_to_json(const std::vector<Eigen::MatrixXd>& mats,
                   const std::vector<Eigen::VectorXd>& ws, const char* mat_key) {
    Json j;
    j["n"] = static_cast<int>(mats[0].rows());
    j["num_actions"] = static_cast<int>(mats.size());
    j[mat_key] = Json::array();
    j["w"] = Json::array();
    for (std::size_t a = 0; a < mats.size(); ++a) {
        j[mat_key].push_back(flatten(mats[a]));
        j["w"].push_back(std::vector<double>(ws[a].data(), ws[a].data() + ws[a].size()));
    }
    return j;
}

void model_from_json(const Json& j, const char* mat_key, std::vector<Eigen::MatrixXd>& mats,
                     std::vector<Eigen::VectorXd>& ws) {
    int n = j.at("n").get<int>();
    int na = j.at("num_actions").get<int>();
    for (int a = 0; a < na; ++a) {
        mats.push_back(unflatten(j.at(mat_key).at(a).get<std::vector<double>>(), n, n));
        auto w = j.at("w").at(a).get<std::vector<double>>();
        ws.push_back(Eigen::Map<Eigen::VectorXd>(w.data(), w.size()));
    }
}

}  // namespace

Json lam_to_json(const Lam& lam) { return model_to_json(lam.m, lam.w, "m"); }

Lam lam_from_json(const Json& j) {
    Lam lam;
    model_from_json(j, "m", lam.m, lam.w);
    return lam;
}

Json lsfm_to_json(const Lsfm& lsfm) { return model_to_json(lsfm.f, lsfm.w, "f"); }

Lsfm lsfm_from_json(const Json& j) {
    Lsfm lsfm;
    model_from_json(j, "f", lsfm.f, lsfm.w);
    return lsfm;
}

Json error_report_to_json(const ErrorReport& r) {
    return Json{{"eps_r", r.eps_r},     {"eps_p", r.eps_p},   {"eps_psi", r.eps_psi},
                {"delta", r.delta},     {"m_norm", r.m_norm}, {"w_norm", r.w_norm},
                {"n_norm", r.n_norm}};
}

std::string error_report_csv_header() {
    return "eps_r,eps_p,eps_psi,delta,m_norm,w_norm,n_norm";
}

std::string error_report_csv_row(const ErrorReport& r) {
    std::ostringstream out;
    out << format_double(r.eps_r) << ',' << format_double(r.eps_p) << ','
        << format_double(r.eps_psi) << ',' << format_double(r.delta) << ','
        << format_double(r.m_norm) << ',' << format_double(r.w_norm) << ','
        << format_double(r.n_norm);
    return out.str();
}

Json abstraction_to_json(const DiscreteAbstraction& abs) {
    return Json{{"cluster_of", abs.cluster_of}, {"num_clusters", abs.num_clusters}};
}

DiscreteAbstraction abstraction_from_json(const Json& j) {
    DiscreteAbstraction abs;
    abs.cluster_of = j.at("cluster_of").get<std::vector<int>>();
    abs.num_clusters = j.at("num_clusters").get<int>();
    return abs;
}

Json checkpoint_to_json(const Checkpoint& cp) {
    Json j;
    j["gamma"] = cp.gamma;
    j["representation"] = representation_to_json(cp.phi);
    if (cp.has_lam) j["lam"] = lam_to_json(cp.lam);
    if (cp.has_lsfm) j["lsfm"] = lsfm_to_json(cp.lsfm);
    return j;
}

Checkpoint checkpoint_from_json(const Json& j) {
    Checkpoint cp;
    cp.gamma = j.at("gamma").get<double>();
    cp.phi = representation_from_json(j.at("representation"));
    if (j.contains("lam")) {
        cp.lam = lam_from_json(j.at("lam"));
        cp.has_lam = true;
    }
    if (j.contains("lsfm")) {
        cp.lsfm = lsfm_from_json(j.at("lsfm"));
        cp.has_lsfm = true;
    }
    return cp;
}

std::string dataset_to_csv(const TransitionDataset& dataset) {
    std::ostringstream out;
    out << "s,a,r,s_next\n";
    for (const auto& rec : dataset.records)
        out << rec.s << ',' << rec.a << ',' << format_double(rec.r) << ',' << rec.s_next << '\n';
    return out.str();
}

TransitionDataset dataset_from_csv(const std::string& text) {
    TransitionDataset data;
    std::istringstream in(text);
    std::string line;
    std::getline(in, line);  // header
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        TransitionRecord rec;
        if (std::sscanf(line.c_str(), "%d,%d,%lf,%d", &rec.s, &rec.a, &rec.r, &rec.s_next) != 4)
            throw std::invalid_argument("dataset_from_csv: malformed row: " + line);
        data.records.push_back(rec);
    }
    return data;
}

EnvTask grid_task_from_json(const Json& j) {
    auto lines = j.at("map").get<std::vector<std::string>>();
    GridWorldSpec spec = parse_grid_ascii(lines, j.value("slip", 0.0));
    const int n = spec.width * spec.height;
    Eigen::VectorXd enter = Eigen::VectorXd::Zero(n);
    for (int s : spec.puddles) enter[s] = j.value("puddle_reward", -1.0);
    std::vector<char> terminal;
    if (spec.goal) {
        enter[*spec.goal] = j.value("goal_reward", 1.0);
        terminal.assign(n, 0);
        terminal[*spec.goal] = 1;
    }
    return make_grid_env(spec, j.value("gamma", 0.9), enter, terminal);
}

void atomic_write_file(const std::string& path, const std::string& content) {
    std::filesystem::path target(path);
    if (target.has_parent_path()) std::filesystem::create_directories(target.parent_path());
    std::filesystem::path tmp = target;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("atomic_write_file: cannot open " + tmp.string());
        out << content;
    }
    std::filesystem::rename(tmp, target);
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("read_file: cannot open " + path);
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

std::string format_double(double value) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, res.ptr);
}

}  // namespace sfrl

#include "bell/model_json.hpp"

#include "bell/recipes.hpp"

#include <fstream>

namespace bell {

using nlohmann::json;

namespace {

BigQ rational_from_json(const json& v, const std::string& where) {
    if (v.is_string()) {
        try {
            return parse_rational(v.get<std::string>());
        } catch (const std::invalid_argument& e) {
            throw config_error(where + ": " + e.what());
        }
    }
    if (v.is_number_integer()) return BigQ(v.get<long long>());
    if (v.is_number_float()) return rational_from_double(v.get<double>());
    throw config_error(where + ": expected a number or a \"p/q\" string");
}

json rational_to_json(const BigQ& q) {
    const auto& den = boost::multiprecision::denominator(q);
    const auto& num = boost::multiprecision::numerator(q);
    if (den == 1 && num >= std::numeric_limits<long long>::min() &&
        num <= std::numeric_limits<long long>::max())
        return num.convert_to<long long>();
    return rational_to_string(q);
}

const json& need(const json& j, const char* key, const std::string& where) {
    const auto it = j.find(key);
    if (it == j.end())
        throw config_error(where + ": missing key '" + key + "'");
    return *it;
}

std::size_t need_size(const json& j, const char* key, const std::string& where) {
    const json& v = need(j, key, where);
    if (!v.is_number_unsigned() || v.get<std::uint64_t>() == 0)
        throw config_error(where + "." + key + ": expected a positive integer");
    return v.get<std::size_t>();
}

ProbTable vector_table(const json& v, std::size_t n, const std::string& where) {
    if (!v.is_array() || v.size() != n)
        throw config_error(where + ": expected an array of " + std::to_string(n) +
                           " weights");
    ProbTable t({n});
    for (std::size_t i = 0; i < n; ++i)
        t.at(i) = rational_from_json(v[i], where + "[" + std::to_string(i) + "]");
    return t;
}

ProbTable matrix_table(const json& v, std::size_t rows, std::size_t cols,
                       const std::string& where) {
    if (!v.is_array() || v.size() != rows)
        throw config_error(where + ": expected " + std::to_string(rows) + " rows");
    ProbTable t({rows, cols});
    for (std::size_t i = 0; i < rows; ++i) {
        const json& row = v[i];
        const std::string rw = where + "[" + std::to_string(i) + "]";
        if (!row.is_array() || row.size() != cols)
            throw config_error(rw + ": expected " + std::to_string(cols) +
                               " entries");
        for (std::size_t j = 0; j < cols; ++j)
            t.at(i, j) =
                rational_from_json(row[j], rw + "[" + std::to_string(j) + "]");
    }
    return t;
}

std::int8_t outcome_from_json(const json& v, const std::string& where) {
    if (!v.is_number_integer())
        throw config_error(where + ": expected an integer outcome");
    const long long o = v.get<long long>();
    if (o < -1 || o > 1)
        throw config_error(where + ": outcome " + std::to_string(o) +
                           " is not in {-1, 0, 1}");
    return static_cast<std::int8_t>(o);
}

// [label] or [label][instrument], flattened to label-major order.
std::vector<std::int8_t> outcome_table(const json& v, std::size_t n_labels,
                                       std::size_t n_instr, bool with_instr_axis,
                                       const std::string& where) {
    if (!v.is_array() || v.size() != n_labels)
        throw config_error(where + ": expected " + std::to_string(n_labels) +
                           " per-label entries");
    std::vector<std::int8_t> out;
    out.reserve(n_labels * n_instr);
    for (std::size_t l = 0; l < n_labels; ++l) {
        const std::string lw = where + "[" + std::to_string(l) + "]";
        if (!with_instr_axis) {
            out.push_back(outcome_from_json(v[l], lw));
            continue;
        }
        const json& row = v[l];
        if (!row.is_array() || row.size() != n_instr)
            throw config_error(lw + ": expected " + std::to_string(n_instr) +
                               " instrument entries");
        for (std::size_t i = 0; i < n_instr; ++i)
            out.push_back(outcome_from_json(row[i], lw + "[" + std::to_string(i) + "]"));
    }
    return out;
}

std::vector<BigQ> prob_row(const json& v, std::size_t n, const std::string& where) {
    if (!v.is_array() || v.size() != n)
        throw config_error(where + ": expected " + std::to_string(n) +
                           " probabilities");
    std::vector<BigQ> out(n);
    for (std::size_t i = 0; i < n; ++i)
        out[i] = rational_from_json(v[i], where + "[" + std::to_string(i) + "]");
    return out;
}

std::vector<double> delay_row(const json& v, std::size_t n, const std::string& where) {
    if (!v.is_array() || v.size() != n)
        throw config_error(where + ": expected " + std::to_string(n) + " delays");
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        const json& d = v[i];
        if (!d.is_number())
            throw config_error(where + "[" + std::to_string(i) +
                               "]: expected a number");
        out[i] = d.get<double>();
    }
    return out;
}

const char* slot_key(SettingSlot s) {
    switch (s) {
        case SettingSlot::ax: return "alice_x";
        case SettingSlot::axp: return "alice_xp";
        case SettingSlot::by: return "bob_y";
        case SettingSlot::byp: return "bob_yp";
    }
    return "";
}

Model parse_recipe(const json& r, const std::string& where);

Model parse_by_kind(ModelKind kind, std::string id, const json& r,
                    const std::string& where) {
    const json& spaces = need(r, "lambda_spaces", where);
    const std::size_t n1 = need_size(spaces, "lambda1", where + ".lambda_spaces");
    const std::size_t n2 = need_size(spaces, "lambda2", where + ".lambda_spaces");
    const json& weights = need(r, "weights", where);
    ProbTable source = matrix_table(need(weights, "source", where + ".weights"),
                                    n1, n2, where + ".weights.source");

    auto instrument_sizes = [&] {
        std::array<std::size_t, 4> sz;
        for (auto slot : all_slots)
            sz[idx(slot)] =
                need_size(spaces, slot_key(slot), where + ".lambda_spaces");
        return sz;
    };
    auto outcome_tables = [&](const std::array<std::size_t, 4>& sz,
                              bool with_instr_axis) {
        const json& tabs = need(r, "outcome_tables", where);
        const json& ja = need(tabs, "alice", where + ".outcome_tables");
        const json& jb = need(tabs, "bob", where + ".outcome_tables");
        if (!ja.is_array() || ja.size() != 2 || !jb.is_array() || jb.size() != 2)
            throw config_error(where + ".outcome_tables: expected two per-setting "
                                       "tables per side");
        std::array<std::vector<std::int8_t>, 2> a, b;
        for (auto label : {SettingLabel::plain, SettingLabel::prime}) {
            a[idx(label)] = outcome_table(
                ja[idx(label)], n1, sz[idx(make_slot(Side::alice, label))],
                with_instr_axis,
                where + ".outcome_tables.alice[" + std::to_string(idx(label)) + "]");
            b[idx(label)] = outcome_table(
                jb[idx(label)], n2, sz[idx(make_slot(Side::bob, label))],
                with_instr_axis,
                where + ".outcome_tables.bob[" + std::to_string(idx(label)) + "]");
        }
        return std::pair(a, b);
    };

    switch (kind) {
        case ModelKind::deterministic_local: {
            auto [a, b] = outcome_tables({1, 1, 1, 1}, false);
            return build_deterministic_local(std::move(id), std::move(source),
                                             std::move(a), std::move(b));
        }
        case ModelKind::stochastic_local: {
            const json& probs = need(r, "outcome_probs", where);
            const json& ja = need(probs, "alice", where + ".outcome_probs");
            const json& jb = need(probs, "bob", where + ".outcome_probs");
            if (!ja.is_array() || ja.size() != 2 || !jb.is_array() || jb.size() != 2)
                throw config_error(where + ".outcome_probs: expected two "
                                           "per-setting rows per side");
            std::array<std::vector<BigQ>, 2> pa, pb;
            for (std::size_t l = 0; l < 2; ++l) {
                pa[l] = prob_row(ja[l], n1, where + ".outcome_probs.alice[" +
                                                std::to_string(l) + "]");
                pb[l] = prob_row(jb[l], n2, where + ".outcome_probs.bob[" +
                                                std::to_string(l) + "]");
            }
            return build_stochastic_local(std::move(id), std::move(source),
                                          std::move(pa), std::move(pb));
        }
        case ModelKind::contextual_product:
        case ModelKind::time_tag: {
            const auto sz = instrument_sizes();
            std::array<ProbTable, 4> instr;
            for (auto slot : all_slots)
                instr[idx(slot)] = vector_table(
                    need(weights, slot_key(slot), where + ".weights"), sz[idx(slot)],
                    where + ".weights." + slot_key(slot));
            auto [a, b] = outcome_tables(sz, true);
            if (kind == ModelKind::contextual_product)
                return build_contextual_product(std::move(id), std::move(source),
                                                std::move(instr), std::move(a),
                                                std::move(b));
            const json& delays = need(r, "delays", where);
            const json& da = need(delays, "alice", where + ".delays");
            const json& db = need(delays, "bob", where + ".delays");
            if (!da.is_array() || da.size() != 2 || !db.is_array() || db.size() != 2)
                throw config_error(where + ".delays: expected two per-setting rows "
                                           "per side");
            std::array<std::vector<double>, 2> ad, bd;
            for (std::size_t l = 0; l < 2; ++l) {
                ad[l] = delay_row(da[l], n1,
                                  where + ".delays.alice[" + std::to_string(l) + "]");
                bd[l] = delay_row(db[l], n2,
                                  where + ".delays.bob[" + std::to_string(l) + "]");
            }
            return build_timetag_model(std::move(id), std::move(source),
                                       std::move(instr), std::move(a), std::move(b),
                                       std::move(ad), std::move(bd));
        }
        case ModelKind::contextual_correlated: {
            const auto sz = instrument_sizes();
            std::array<ProbTable, 4> joint;
            for (auto c : all_contexts) {
                const std::string key =
                    "context_" + std::string(context_name(c));
                joint[idx(c)] = matrix_table(
                    need(weights, key.c_str(), where + ".weights"),
                    sz[idx(alice_slot(c))], sz[idx(bob_slot(c))],
                    where + ".weights." + key);
            }
            auto [a, b] = outcome_tables(sz, true);
            return build_contextual_correlated(std::move(id), std::move(source),
                                               sz, std::move(joint), std::move(a),
                                               std::move(b));
        }
        case ModelKind::coupled_joint: {
            throw std::logic_error("parse_by_kind: coupled_joint handled earlier");
        }
    }
    throw config_error(where + ": unhandled model kind");
}

Model parse_recipe(const json& r, const std::string& where) {
    if (!r.is_object()) throw config_error(where + ": expected an object");
    const json& jk = need(r, "kind", where);
    if (!jk.is_string())
        throw config_error(where + ".kind: expected a string");
    const auto kind = model_kind_from_name(jk.get<std::string>());
    if (!kind)
        throw config_error(where + ".kind: unknown model kind '" +
                           jk.get<std::string>() + "'");
    const json& jid = need(r, "id", where);
    if (!jid.is_string() || jid.get<std::string>().empty())
        throw config_error(where + ".id: expected a non-empty string");
    std::string id = jid.get<std::string>();

    Model m = *kind == ModelKind::coupled_joint
                  ? build_coupling(parse_recipe(need(r, "base", where),
                                                where + ".base"),
                                   id)
                  : parse_by_kind(*kind, std::move(id), r, where);

    if (const auto it = r.find("angles"); it != r.end()) {
        const json& ja = need(*it, "alice", where + ".angles");
        const json& jb = need(*it, "bob", where + ".angles");
        if (!ja.is_array() || ja.size() != 2 || !jb.is_array() || jb.size() != 2)
            throw config_error(where + ".angles: expected two angles per side");
        for (std::size_t l = 0; l < 2; ++l) {
            m.angles[idx(make_slot(Side::alice, static_cast<SettingLabel>(l)))] =
                ja[l].get<double>();
            m.angles[idx(make_slot(Side::bob, static_cast<SettingLabel>(l)))] =
                jb[l].get<double>();
        }
    }
    return m;
}

json weights_json(const Model& m) {
    json w;
    {
        json rows = json::array();
        for (std::size_t i = 0; i < m.n1; ++i) {
            json row = json::array();
            for (std::size_t j = 0; j < m.n2; ++j)
                row.push_back(rational_to_json(m.source.at(i, j)));
            rows.push_back(std::move(row));
        }
        w["source"] = std::move(rows);
    }
    if (m.uses_joint_instruments()) {
        for (auto c : all_contexts) {
            const auto& t = m.instr_joint[idx(c)];
            json rows = json::array();
            for (std::size_t i = 0; i < t.shape()[0]; ++i) {
                json row = json::array();
                for (std::size_t j = 0; j < t.shape()[1]; ++j)
                    row.push_back(rational_to_json(t.at(i, j)));
                rows.push_back(std::move(row));
            }
            w["context_" + std::string(context_name(c))] = std::move(rows);
        }
    } else if (m.kind == ModelKind::contextual_product ||
               m.kind == ModelKind::time_tag) {
        for (auto slot : all_slots) {
            json row = json::array();
            for (std::size_t i = 0; i < m.instr_n[idx(slot)]; ++i)
                row.push_back(rational_to_json(m.instr[idx(slot)].at(i)));
            w[slot_key(slot)] = std::move(row);
        }
    }
    return w;
}

json outcome_tables_json(const Model& m, bool with_instr_axis) {
    auto side_json = [&](Side side) {
        const auto& tables = side == Side::alice ? m.a_table : m.b_table;
        const std::size_t n_labels = side == Side::alice ? m.n1 : m.n2;
        json per_setting = json::array();
        for (auto label : {SettingLabel::plain, SettingLabel::prime}) {
            const std::size_t k = m.instr_n[idx(make_slot(side, label))];
            const auto& t = tables[idx(label)];
            json rows = json::array();
            for (std::size_t l = 0; l < n_labels; ++l) {
                if (!with_instr_axis) {
                    rows.push_back(static_cast<int>(t[l]));
                    continue;
                }
                json row = json::array();
                for (std::size_t i = 0; i < k; ++i)
                    row.push_back(static_cast<int>(t[l * k + i]));
                rows.push_back(std::move(row));
            }
            per_setting.push_back(std::move(rows));
        }
        return per_setting;
    };
    return json{{"alice", side_json(Side::alice)}, {"bob", side_json(Side::bob)}};
}

json recipe_body(const Model& m) {
    json r;
    r["kind"] = std::string(model_kind_name(m.kind));
    r["id"] = m.id;
    if (m.kind == ModelKind::coupled_joint) {
        // The coupling shares the base model's tables; reconstruct the base
        // recipe by flipping the kind back.
        Model base = m;
        base.kind = m.base_kind;
        base.id = m.id + ".base";
        r["base"] = recipe_body(base);
        return r;
    }
    json spaces;
    spaces["lambda1"] = m.n1;
    spaces["lambda2"] = m.n2;
    const bool has_instr_axis = m.kind != ModelKind::deterministic_local &&
                                m.kind != ModelKind::stochastic_local;
    if (has_instr_axis)
        for (auto slot : all_slots) spaces[slot_key(slot)] = m.instr_n[idx(slot)];
    r["lambda_spaces"] = std::move(spaces);
    r["weights"] = weights_json(m);
    if (m.kind == ModelKind::stochastic_local) {
        auto probs = [&](const std::array<std::vector<BigQ>, 2>& p) {
            json out = json::array();
            for (const auto& row : p) {
                json jr = json::array();
                for (const auto& q : row) jr.push_back(rational_to_json(q));
                out.push_back(std::move(jr));
            }
            return out;
        };
        r["outcome_probs"] = json{{"alice", probs(m.a_prob)}, {"bob", probs(m.b_prob)}};
    } else {
        r["outcome_tables"] =
            outcome_tables_json(m, m.kind != ModelKind::deterministic_local);
    }
    if (m.kind == ModelKind::time_tag) {
        auto delays = [&](const std::array<std::vector<double>, 2>& d) {
            json out = json::array();
            for (const auto& row : d) out.push_back(row);
            return out;
        };
        r["delays"] = json{{"alice", delays(m.a_delay)}, {"bob", delays(m.b_delay)}};
    }
    if (m.angles[0] || m.angles[1] || m.angles[2] || m.angles[3]) {
        auto side_angles = [&](Side s) {
            json out = json::array();
            for (auto label : {SettingLabel::plain, SettingLabel::prime}) {
                const auto& a = m.angles[idx(make_slot(s, label))];
                out.push_back(a ? json(*a) : json());
            }
            return out;
        };
        r["angles"] = json{{"alice", side_angles(Side::alice)},
                           {"bob", side_angles(Side::bob)}};
    }
    return r;
}

}  // namespace

json recipe_to_json(const Model& m) { return json{{"recipe", recipe_body(m)}}; }

Model model_from_recipe_json(const json& doc) {
    if (!doc.is_object())
        throw config_error("recipe document: expected a JSON object");
    return parse_recipe(need(doc, "recipe", "recipe document"), "recipe");
}

Model load_recipe_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in)
        throw config_error("cannot open recipe file '" + path.string() + "'");
    json doc;
    try {
        in >> doc;
    } catch (const json::parse_error& e) {
        throw config_error("recipe file '" + path.string() + "': " + e.what());
    }
    return model_from_recipe_json(doc);
}

void save_recipe_file(const Model& m, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out)
        throw config_error("cannot write recipe file '" + path.string() + "'");
    out << recipe_to_json(m).dump(2) << "\n";
}

}  // namespace bell

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "bagsem/common.hpp"
#include "bagsem/datalog.hpp"
#include "bagsem/datalog_normalize.hpp"
#include "bagsem/datalog_parser.hpp"
#include "bagsem/eval.hpp"
#include "bagsem/gen.hpp"
#include "bagsem/mra.hpp"
#include "bagsem/mra_parser.hpp"
#include "bagsem/pattern.hpp"
#include "bagsem/rewrite.hpp"
#include "bagsem/translate.hpp"

// Differential-equivalence campaigns: generate random instances, run them
// through a translation pipeline and through the reference evaluator, and
// report every multiset mismatch together with a shrunk replayable witness.
namespace bagsem::fuzz {

enum class Pipeline { SparqlDatalog, SparqlMra, W3cCore, DatalogRoundtrip, All };

// Deliberate single-point defects, used to measure whether the campaign
// actually notices broken translations and evaluators.
enum class Fault {
    None,
    DropCompRule,           // one compatibility merge direction missing
    SwapNullPadding,        // UNION branches pad the wrong variables
    JoinCountProduct,       // Datalog joins add counts instead of multiplying
    DropNormalizationCase,  // normalizer silently discards inequalities
    UnionCountOffByOne,     // algebra union adds one to every row count
};

inline std::string to_string(Pipeline p) {
    switch (p) {
        case Pipeline::SparqlDatalog: return "sparql-datalog";
        case Pipeline::SparqlMra: return "sparql-mra";
        case Pipeline::W3cCore: return "w3c-core";
        case Pipeline::DatalogRoundtrip: return "datalog-roundtrip";
        default: return "all";
    }
}

inline std::optional<Pipeline> parse_pipeline(const std::string& s) {
    for (Pipeline p : {Pipeline::SparqlDatalog, Pipeline::SparqlMra, Pipeline::W3cCore,
                       Pipeline::DatalogRoundtrip, Pipeline::All})
        if (to_string(p) == s) return p;
    return std::nullopt;
}

inline std::string to_string(Fault f) {
    switch (f) {
        case Fault::DropCompRule: return "drop-comp-rule";
        case Fault::SwapNullPadding: return "swap-null-padding";
        case Fault::JoinCountProduct: return "join-count-product";
        case Fault::DropNormalizationCase: return "drop-normalization-case";
        case Fault::UnionCountOffByOne: return "union-count-off-by-one";
        default: return "none";
    }
}

inline std::optional<Fault> parse_fault(const std::string& s) {
    for (Fault f : {Fault::None, Fault::DropCompRule, Fault::SwapNullPadding,
                    Fault::JoinCountProduct, Fault::DropNormalizationCase,
                    Fault::UnionCountOffByOne})
        if (to_string(f) == s) return f;
    return std::nullopt;
}

// Join-union interaction is where the subtle counting bugs live, so the
// default operator mix leans heavily on AND and UNION.
inline std::map<sparql::GraphPattern::Kind, size_t> default_pattern_weights() {
    return {{sparql::GraphPattern::Kind::And, 4},
            {sparql::GraphPattern::Kind::Union, 4}};
}

struct FuzzConfig {
    uint64_t seed = 1;
    int iterations = 200;
    size_t max_triples = 8;
    size_t max_iris = 4;
    size_t max_literals = 3;
    size_t max_pattern_depth = 4;
    std::map<sparql::GraphPattern::Kind, size_t> pattern_weights =
        default_pattern_weights();
    Pipeline pipeline = Pipeline::All;
    Fault fault = Fault::None;

    void validate() const {
        if (iterations <= 0) throw ValidationError("iterations must be positive");
        if (max_triples == 0 || max_iris == 0 || max_literals == 0 ||
            max_pattern_depth == 0)
            throw ValidationError("generator bounds must be positive");
    }
};

struct Discrepancy {
    Pipeline pipeline = Pipeline::All;
    int iteration = 0;
    std::string instance;         // rendered pattern or program
    std::string data;             // rendered graph, or goal for programs
    std::string expected;         // reference multiset
    std::string actual;           // multiset the pipeline produced
    std::string shrunk_instance;  // smallest replay still showing the mismatch
    std::string shrunk_data;
};

struct CampaignReport {
    FuzzConfig config;
    int iterations = 0;
    int checks = 0;
    std::vector<Discrepancy> discrepancies;

    bool clean() const { return discrepancies.empty(); }
};

namespace fuzz_detail {

inline constexpr int kShrinkBudget = 500;

// One knob set per fault; each pipeline picks the pieces it consumes.
struct FaultKnobs {
    translate::PatternTranslationOptions topts;
    datalog::EvalOptions dlopts;
    datalog::NormalizeOptions nopts;
    mra::EvalOptions mopts;
};

inline FaultKnobs knobs_of(Fault f) {
    FaultKnobs k;
    switch (f) {
        case Fault::DropCompRule: k.topts.drop_comp_rule = true; break;
        case Fault::SwapNullPadding: k.topts.swap_null_padding = true; break;
        case Fault::JoinCountProduct:
            k.dlopts.fault = datalog::EvalOptions::Fault::AddJoinCounts;
            break;
        case Fault::DropNormalizationCase: k.nopts.drop_inequalities = true; break;
        case Fault::UnionCountOffByOne: k.mopts.union_plus_one = true; break;
        default: break;
    }
    return k;
}

inline bool same(const sparql::MappingMultiset& x, const sparql::MappingMultiset& y) {
    return sparql::multiset_equal(x, y);
}
inline bool same(const datalog::AnswerMultiset& x, const datalog::AnswerMultiset& y) {
    return x == y;
}

inline std::string render_result(const sparql::MappingMultiset& ms) {
    std::string out;
    for (const auto& [m, c] : ms.entries) {
        out += "{";
        bool first = true;
        for (const auto& [v, t] : m.bindings) {
            if (!first) out += ", ";
            first = false;
            out += rdf::to_string(v) + " -> " + rdf::to_string(t);
        }
        out += "} * " + std::to_string(c) + "\n";
    }
    return out.empty() ? "(empty)\n" : out;
}

inline std::string render_result(const datalog::AnswerMultiset& am) {
    std::string out;
    for (const auto& [sub, n] : am.entries) {
        out += "{";
        bool first = true;
        for (const auto& [v, value] : sub) {
            if (!first) out += ", ";
            first = false;
            out += v + " -> " + value;
        }
        out += "} * " + std::to_string(n) + "\n";
    }
    return out.empty() ? "(empty)\n" : out;
}

// The three graph-pattern pipelines share one comparison and one shrinker;
// they differ only in how the candidate multiset is computed.
struct SparqlCase {
    sparql::PatternPtr pattern;
    rdf::Graph graph;
};

template <class System>
inline bool diverges(const SparqlCase& c, const System& system) {
    try {
        return !same(system(c.pattern, c.graph), sparql::evaluate(c.pattern, c.graph));
    } catch (const Error&) {
        // a shrink candidate that stops being translatable is not a witness
        return false;
    }
}

// Greedy minimization: drop triples while the mismatch persists, then try to
// descend into subpatterns, and repeat. Bounded by the replay budget.
template <class System>
inline SparqlCase shrink_sparql(SparqlCase c, const System& system, int budget) {
    using GP = sparql::GraphPattern;
    bool progress = true;
    while (progress && budget > 0) {
        progress = false;
        for (const auto& t : std::vector<rdf::Triple>(c.graph.begin(), c.graph.end())) {
            if (budget-- <= 0) return c;
            SparqlCase smaller{c.pattern, c.graph};
            smaller.graph.erase(t);
            if (diverges(smaller, system)) {
                c.graph = std::move(smaller.graph);
                progress = true;
            }
        }
        std::vector<sparql::PatternPtr> children;
        if (c.pattern->kind != GP::Kind::Triple) {
            if (c.pattern->left) children.push_back(c.pattern->left);
            if (c.pattern->right) children.push_back(c.pattern->right);
        }
        for (const auto& child : children) {
            if (budget-- <= 0) return c;
            if (diverges(SparqlCase{child, c.graph}, system)) {
                c.pattern = child;
                progress = true;
                break;
            }
        }
    }
    return c;
}

template <class System>
inline std::optional<Discrepancy> check_sparql_case(Pipeline pipe, int iteration,
                                                    SparqlCase c, const System& system) {
    sparql::MappingMultiset want = sparql::evaluate(c.pattern, c.graph);
    sparql::MappingMultiset got = system(c.pattern, c.graph);
    if (same(got, want)) return std::nullopt;

    Discrepancy d;
    d.pipeline = pipe;
    d.iteration = iteration;
    d.instance = sparql::render(c.pattern);
    d.data = rdf::serialize_graph(c.graph);
    d.expected = render_result(want);
    d.actual = render_result(got);
    SparqlCase small = shrink_sparql(std::move(c), system, kShrinkBudget);
    d.shrunk_instance = sparql::render(small.pattern);
    d.shrunk_data = rdf::serialize_graph(small.graph);
    return d;
}

// Program pipelines compare two goal-answer computations on one program.
struct ProgramCase {
    datalog::Program program;
    datalog::Atom goal;
};

template <class SystemA, class SystemB>
inline bool diverges_program(const ProgramCase& c, const SystemA& a, const SystemB& b) {
    try {
        return !same(a(c), b(c));
    } catch (const Error&) {
        return false;
    }
}

// Same greedy idea as the pattern shrinker: drop whole facts, then whole
// rules, as long as the two sides still disagree.
template <class SystemA, class SystemB>
inline ProgramCase shrink_program(ProgramCase c, const SystemA& a, const SystemB& b,
                                  int budget) {
    bool progress = true;
    while (progress && budget > 0) {
        progress = false;
        for (const auto& [f, n] : std::map<datalog::GroundFact, Count>(c.program.facts)) {
            if (budget-- <= 0) return c;
            ProgramCase smaller = c;
            smaller.program.facts.erase(f);
            if (diverges_program(smaller, a, b)) {
                c = std::move(smaller);
                progress = true;
            }
        }
        for (size_t i = 0; i < c.program.rules.size(); ++i) {
            if (budget-- <= 0) return c;
            ProgramCase smaller = c;
            smaller.program.rules.erase(smaller.program.rules.begin() +
                                        static_cast<std::ptrdiff_t>(i));
            if (diverges_program(smaller, a, b)) {
                c = std::move(smaller);
                progress = true;
                break;
            }
        }
    }
    return c;
}

template <class SystemA, class SystemB>
inline std::optional<Discrepancy> check_program_case(Pipeline pipe, int iteration,
                                                     const std::string& label,
                                                     ProgramCase c, const SystemA& a,
                                                     const SystemB& b) {
    auto want = b(c);
    auto got = a(c);
    if (same(got, want)) return std::nullopt;

    Discrepancy d;
    d.pipeline = pipe;
    d.iteration = iteration;
    d.instance = datalog::to_string(c.program);
    d.data = label + " goal: " + datalog::to_string(c.goal);
    d.expected = render_result(want);
    d.actual = render_result(got);
    ProgramCase small = shrink_program(std::move(c), a, b, kShrinkBudget);
    d.shrunk_instance = datalog::to_string(small.program);
    d.shrunk_data = label + " goal: " + datalog::to_string(small.goal);
    return d;
}

inline gen::GraphGenConfig graph_config(const FuzzConfig& cfg) {
    gen::GraphGenConfig g;
    g.max_triples = cfg.max_triples;
    g.pools.max_iris = cfg.max_iris;
    g.pools.max_literals = cfg.max_literals;
    return g;
}

inline gen::PatternGenConfig pattern_config(const FuzzConfig& cfg,
                                            gen::PatternFlavor flavor) {
    gen::PatternGenConfig p;
    p.flavor = flavor;
    p.max_depth = cfg.max_pattern_depth;
    p.weights = cfg.pattern_weights;
    p.pools.max_iris = cfg.max_iris;
    p.pools.max_literals = cfg.max_literals;
    return p;
}

inline void run_iteration(Pipeline pipe, const FuzzConfig& cfg, int iteration,
                          gen::Rng rng, const FaultKnobs& k, CampaignReport& report) {
    auto record = [&report](std::optional<Discrepancy> d) {
        ++report.checks;
        if (d) report.discrepancies.push_back(std::move(*d));
    };

    switch (pipe) {
        case Pipeline::SparqlDatalog: {
            SparqlCase c{
                gen::gen_pattern(rng, pattern_config(cfg, gen::PatternFlavor::Core)),
                gen::gen_graph(rng, graph_config(cfg))};
            record(check_sparql_case(
                pipe, iteration, std::move(c),
                [&k](const sparql::PatternPtr& p, const rdf::Graph& g) {
                    auto q = translate::sparql_to_datalog(p, k.topts);
                    return translate::answers_to_mappings(
                        translate::answers_on_graph(q, g, k.dlopts));
                }));
            return;
        }
        case Pipeline::SparqlMra: {
            SparqlCase c{
                gen::gen_pattern(rng, pattern_config(cfg, gen::PatternFlavor::Core)),
                gen::gen_graph(rng, graph_config(cfg))};
            record(check_sparql_case(
                pipe, iteration, std::move(c),
                [&k](const sparql::PatternPtr& p, const rdf::Graph& g) {
                    translate::ProgramAsExpr t =
                        translate::sparql_to_mra(p, g, k.topts, k.nopts);
                    return translate::relation_to_mappings(
                        mra::eval_expr(t.relations, t.expr, k.mopts));
                }));
            return;
        }
        case Pipeline::W3cCore: {
            SparqlCase c{
                gen::gen_pattern(rng, pattern_config(cfg, gen::PatternFlavor::W3c)),
                gen::gen_graph(rng, graph_config(cfg))};
            record(check_sparql_case(pipe, iteration, std::move(c),
                                     [](const sparql::PatternPtr& p, const rdf::Graph& g) {
                                         return sparql::evaluate(sparql::to_core(p), g);
                                     }));
            return;
        }
        case Pipeline::DatalogRoundtrip: {
            // leg one: a shaped program against its graph-pattern image
            gen::ShapedProgram sp = gen::gen_shaped_program(rng);
            record(check_program_case(
                pipe, iteration, "pattern image,",
                ProgramCase{std::move(sp.program), std::move(sp.goal)},
                [](const ProgramCase& c) {
                    sparql::PatternPtr q = translate::datalog_to_sparql(c.program, c.goal);
                    return sparql::evaluate(q, translate::facts_to_graph(c.program));
                },
                [&k](const ProgramCase& c) {
                    return translate::answers_to_mappings_verbatim(
                        datalog::eval_program(c.program, c.goal, k.dlopts));
                }));

            // leg two: a free-form program against its normalized image
            gen::ShapedProgram gp = gen::gen_program(rng);
            record(check_program_case(
                pipe, iteration, "normalized image,",
                ProgramCase{std::move(gp.program), std::move(gp.goal)},
                [&k](const ProgramCase& c) {
                    return datalog::eval_program(datalog::normalize(c.program, k.nopts),
                                                 c.goal);
                },
                [&k](const ProgramCase& c) {
                    return datalog::eval_program(c.program, c.goal, k.dlopts);
                }));
            return;
        }
        default: return;
    }
}

inline void json_escape_into(std::string& out, const std::string& s) {
    for (char ch : s) {
        switch (ch) {
            case '"': out += "\\\""; break;
            case '\\': out += "\\\\"; break;
            case '\n': out += "\\n"; break;
            case '\t': out += "\\t"; break;
            case '\r': out += "\\r"; break;
            default:
                if (static_cast<unsigned char>(ch) < 0x20) {
                    static const char* hex = "0123456789abcdef";
                    out += "\\u00";
                    out += hex[(ch >> 4) & 0xF];
                    out += hex[ch & 0xF];
                } else {
                    out += ch;
                }
        }
    }
}

inline void json_field(std::string& out, const std::string& key, const std::string& value,
                       bool last = false) {
    out += "\"" + key + "\": \"";
    json_escape_into(out, value);
    out += last ? "\"" : "\", ";
}

}  // namespace fuzz_detail

// Byte-identical for identical configs: iteration order is fixed and every
// iteration derives its own generator stream from the seed and its index.
inline CampaignReport run_equivalence_campaign(const FuzzConfig& cfg) {
    cfg.validate();
    CampaignReport report;
    report.config = cfg;

    fuzz_detail::FaultKnobs knobs = fuzz_detail::knobs_of(cfg.fault);
    std::vector<Pipeline> pipes;
    if (cfg.pipeline == Pipeline::All)
        pipes = {Pipeline::SparqlDatalog, Pipeline::SparqlMra, Pipeline::W3cCore,
                 Pipeline::DatalogRoundtrip};
    else
        pipes = {cfg.pipeline};

    gen::Rng root(cfg.seed);
    for (int it = 0; it < cfg.iterations; ++it) {
        for (Pipeline p : pipes) {
            gen::Rng rng = root.child(static_cast<uint64_t>(it) * 8 +
                                      static_cast<uint64_t>(p));
            fuzz_detail::run_iteration(p, cfg, it, std::move(rng), knobs, report);
        }
        ++report.iterations;
    }
    return report;
}

inline std::string render_report_json(const CampaignReport& r) {
    using fuzz_detail::json_field;
    std::string out = "{\n  \"config\": {";
    out += "\"seed\": " + std::to_string(r.config.seed) + ", ";
    out += "\"iterations\": " + std::to_string(r.config.iterations) + ", ";
    out += "\"max_triples\": " + std::to_string(r.config.max_triples) + ", ";
    out += "\"max_iris\": " + std::to_string(r.config.max_iris) + ", ";
    out += "\"max_literals\": " + std::to_string(r.config.max_literals) + ", ";
    out += "\"max_pattern_depth\": " + std::to_string(r.config.max_pattern_depth) + ", ";
    json_field(out, "pipeline", to_string(r.config.pipeline));
    json_field(out, "fault", to_string(r.config.fault), true);
    out += "},\n";
    out += "  \"iterations_run\": " + std::to_string(r.iterations) + ",\n";
    out += "  \"checks\": " + std::to_string(r.checks) + ",\n";
    out += "  \"discrepancies\": [";
    for (size_t i = 0; i < r.discrepancies.size(); ++i) {
        const Discrepancy& d = r.discrepancies[i];
        out += i ? ",\n    {" : "\n    {";
        json_field(out, "pipeline", to_string(d.pipeline));
        out += "\"iteration\": " + std::to_string(d.iteration) + ", ";
        json_field(out, "instance", d.instance);
        json_field(out, "data", d.data);
        json_field(out, "expected", d.expected);
        json_field(out, "actual", d.actual);
        json_field(out, "shrunk_instance", d.shrunk_instance);
        json_field(out, "shrunk_data", d.shrunk_data, true);
        out += "}";
    }
    out += r.discrepancies.empty() ? "]\n}\n" : "\n  ]\n}\n";
    return out;
}

inline std::string render_report_text(const CampaignReport& r) {
    std::string out = "pipeline " + to_string(r.config.pipeline) + ", fault " +
                      to_string(r.config.fault) + ": " +
                      std::to_string(r.iterations) + " iterations, " +
                      std::to_string(r.checks) + " checks, " +
                      std::to_string(r.discrepancies.size()) + " discrepancies\n";
    for (const auto& d : r.discrepancies) {
        out += "--- discrepancy at iteration " + std::to_string(d.iteration) + " (" +
               to_string(d.pipeline) + ")\n";
        out += "instance:\n" + d.shrunk_instance;
        if (out.back() != '\n') out += '\n';
        out += "data:\n" + d.shrunk_data;
        if (out.back() != '\n') out += '\n';
    }
    return out;
}

}  // namespace bagsem::fuzz

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "bagsem/datalog_normalize.hpp"
#include "bagsem/datalog_parser.hpp"
#include "bagsem/eval.hpp"
#include "bagsem/fuzz.hpp"
#include "bagsem/mra_parser.hpp"
#include "bagsem/pattern_parser.hpp"
#include "bagsem/rewrite.hpp"
#include "bagsem/translate.hpp"

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw bagsem::Error("cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw bagsem::Error("cannot write " + path.string());
    out << text;
}

// Query atom for a predicate: fresh distinct uppercase variables, one per
// argument position, so the answers enumerate the whole relation.
bagsem::datalog::Atom goal_atom(const bagsem::datalog::Program& p,
                                const std::string& pred) {
    auto arities = p.arities();
    auto it = arities.find(pred);
    if (it == arities.end())
        throw bagsem::ValidationError("unknown predicate " + pred);
    std::vector<bagsem::datalog::DlTerm> args;
    for (size_t i = 0; i < it->second; ++i)
        args.push_back(bagsem::datalog::DlTerm::var("G" + std::to_string(i + 1)));
    return bagsem::datalog::Atom{pred, std::move(args)};
}

std::string answers_text(const bagsem::datalog::Atom& goal,
                         const bagsem::datalog::AnswerMultiset& am) {
    std::string out;
    for (const auto& [sub, c] : am.entries) {
        bagsem::datalog::GroundFact f{goal.pred, {}};
        for (const auto& a : goal.args) f.args.push_back(sub.at(a.text));
        out += bagsem::datalog::to_string(f, c) + "\n";
    }
    return out;
}

int cmd_eval(const std::string& graph_file, const std::string& query_file,
             const std::string& format) {
    auto g = bagsem::rdf::parse_graph(read_file(graph_file));
    auto p = bagsem::sparql::parse_pattern(read_file(query_file));
    auto ms = bagsem::sparql::evaluate(p, g);
    if (format == "json")
        std::cout << bagsem::sparql::to_json(ms).dump(2) << "\n";
    else
        std::cout << bagsem::sparql::render_table(ms, bagsem::sparql::dom(p));
    return 0;
}

int cmd_eval_datalog(const std::string& program_file, const std::string& goal) {
    auto p = bagsem::datalog::parse_program(read_file(program_file));
    auto atom = goal_atom(p, goal);
    std::cout << answers_text(atom, bagsem::datalog::eval_program(p, atom));
    return 0;
}

int cmd_eval_mra(const std::string& db_file, const std::string& expr_file) {
    auto db = bagsem::mra::parse_database(read_file(db_file));
    auto e = bagsem::mra::parse_expression(read_file(expr_file));
    std::cout << bagsem::mra::render(bagsem::mra::eval_expr(db, e), "result");
    return 0;
}

std::string program_with_goal(const bagsem::datalog::Program& p,
                              const bagsem::datalog::Atom& goal) {
    return "% goal: " + bagsem::datalog::to_string(goal) + "\n" +
           bagsem::datalog::to_string(p);
}

// The expression and its base relations go to separate files when a path is
// given, so the two pieces feed straight back into eval-mra; otherwise both
// land on stdout as one annotated listing.
void emit_expr(const bagsem::translate::ProgramAsExpr& q, const std::string& db_out) {
    if (db_out.empty()) {
        std::cout << "% expression\n" << bagsem::mra::render(q.expr)
                  << "\n% relations\n" << bagsem::mra::render(q.relations);
    } else {
        write_file(db_out, bagsem::mra::render(q.relations));
        std::cout << bagsem::mra::render(q.expr) << "\n";
    }
}

int cmd_translate(const std::string& from, const std::string& to,
                  const std::string& in_file, const std::string& graph_file,
                  const std::string& db_file, const std::string& goal,
                  const std::string& graph_out, const std::string& db_out) {
    auto need = [&](const std::string& flag, const std::string& value) {
        if (value.empty())
            throw bagsem::ValidationError(from + " -> " + to + " requires " + flag);
    };
    std::string input = read_file(in_file);

    if (from == "sparql" && to == "core") {
        std::cout << bagsem::sparql::render(
                         bagsem::sparql::to_core(bagsem::sparql::parse_pattern(input)))
                  << "\n";
        return 0;
    }
    if (from == "sparql" && to == "datalog") {
        auto q = bagsem::translate::sparql_to_datalog(bagsem::sparql::parse_pattern(input));
        auto prog = std::move(q.program);
        if (!graph_file.empty()) {
            auto g = bagsem::rdf::parse_graph(read_file(graph_file));
            for (const auto& [f, n] : bagsem::translate::graph_to_facts(g, q.options).facts)
                prog.add_fact(f, n);
        }
        std::cout << program_with_goal(prog, q.goal);
        return 0;
    }
    if (from == "sparql" && to == "mra") {
        need("--graph", graph_file);
        auto g = bagsem::rdf::parse_graph(read_file(graph_file));
        emit_expr(bagsem::translate::sparql_to_mra(bagsem::sparql::parse_pattern(input), g),
                  db_out);
        return 0;
    }
    if (from == "datalog" && to == "sparql") {
        need("--goal", goal);
        auto p = bagsem::datalog::parse_program(input);
        if (!graph_out.empty())
            write_file(graph_out,
                       bagsem::rdf::serialize_graph(bagsem::translate::facts_to_graph(p)));
        std::cout << bagsem::sparql::render(
                         bagsem::translate::datalog_to_sparql(p, goal_atom(p, goal)))
                  << "\n";
        return 0;
    }
    if (from == "datalog" && to == "mra") {
        need("--goal", goal);
        auto p = bagsem::datalog::parse_program(input);
        emit_expr(bagsem::translate::datalog_to_mra(p, goal_atom(p, goal)), db_out);
        return 0;
    }
    if (from == "mra" && to == "datalog") {
        need("--db", db_file);
        auto db = bagsem::mra::parse_database(read_file(db_file));
        std::map<std::string, bagsem::mra::Schema> bases;
        for (const auto& [name, rel] : db) bases.emplace(name, rel.schema);
        auto q = bagsem::translate::mra_to_datalog(bases, bagsem::mra::parse_expression(input));
        auto prog = std::move(q.program);
        for (const auto& [f, n] : bagsem::translate::db_to_facts(db).facts)
            prog.add_fact(f, n);
        std::cout << program_with_goal(prog, q.goal);
        return 0;
    }
    throw bagsem::ValidationError("unsupported translation " + from + " -> " + to);
}

int cmd_normalize(const std::string& program_file) {
    auto p = bagsem::datalog::parse_program(read_file(program_file));
    std::cout << bagsem::datalog::to_string(bagsem::datalog::normalize(p));
    return 0;
}

int cmd_check(const std::string& program_file) {
    auto p = bagsem::datalog::parse_program(read_file(program_file));
    std::cout << "rules: " << p.rules.size() << ", facts: " << p.facts.size() << "\n";
    bool ok = true;

    auto problems = bagsem::datalog::check_safe(p);
    if (problems.empty()) {
        std::cout << "safety: ok\n";
    } else {
        ok = false;
        std::cout << "safety: " << problems.size() << " problem(s)\n";
        for (const auto& msg : problems) std::cout << "  " << msg << "\n";
    }

    if (auto cycle = bagsem::datalog::find_predicate_cycle(p)) {
        ok = false;
        std::cout << "recursion: cycle ";
        for (const auto& pred : *cycle) std::cout << pred << " -> ";
        std::cout << cycle->front() << "\n";
    } else {
        std::cout << "recursion: none\n";
    }
    return ok ? 0 : 2;
}

int cmd_fuzz(const bagsem::fuzz::FuzzConfig& cfg, const std::string& out_dir) {
    auto report = bagsem::fuzz::run_equivalence_campaign(cfg);
    std::cout << bagsem::fuzz::render_report_text(report);
    if (!out_dir.empty()) {
        std::filesystem::path dir(out_dir);
        std::filesystem::create_directories(dir);
        write_file(dir / "report.json", bagsem::fuzz::render_report_json(report));
        int i = 0;
        for (const auto& d : report.discrepancies) {
            nlohmann::json j{{"pipeline", bagsem::fuzz::to_string(d.pipeline)},
                             {"iteration", d.iteration},
                             {"instance", d.instance},
                             {"data", d.data},
                             {"expected", d.expected},
                             {"actual", d.actual},
                             {"shrunk_instance", d.shrunk_instance},
                             {"shrunk_data", d.shrunk_data}};
            write_file(dir / ("witness-" + std::to_string(++i) + ".json"),
                       j.dump(2) + "\n");
        }
    }
    return report.clean() ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"multiset query semantics toolkit"};
    app.require_subcommand(1);

    std::string graph_file, query_file, format = "table";
    auto* eval = app.add_subcommand("eval", "evaluate a graph pattern over a graph");
    eval->add_option("--graph", graph_file, "triple file")->required();
    eval->add_option("--query", query_file, "pattern file")->required();
    eval->add_option("--format", format, "table or json")
        ->check(CLI::IsMember({"table", "json"}));

    std::string dl_program, dl_goal;
    auto* evdl = app.add_subcommand("eval-datalog", "evaluate a program goal");
    evdl->add_option("--program", dl_program, "program file")->required();
    evdl->add_option("--goal", dl_goal, "goal predicate")->required();

    std::string mra_db, mra_expr;
    auto* evmra = app.add_subcommand("eval-mra", "evaluate an algebra expression");
    evmra->add_option("--db", mra_db, "database file")->required();
    evmra->add_option("--expr", mra_expr, "expression file")->required();

    std::string tr_from, tr_to, tr_in, tr_graph, tr_db, tr_goal, tr_graph_out, tr_db_out;
    auto* tr = app.add_subcommand("translate",
                                  "convert between formalisms (datalog sources "
                                  "must be in normal form; see normalize)");
    tr->add_option("--from", tr_from, "sparql, datalog or mra")
        ->required()
        ->check(CLI::IsMember({"sparql", "datalog", "mra"}));
    tr->add_option("--to", tr_to, "core, sparql, datalog or mra")
        ->required()
        ->check(CLI::IsMember({"core", "sparql", "datalog", "mra"}));
    tr->add_option("--in", tr_in, "input file")->required();
    tr->add_option("--graph", tr_graph, "triple file (sparql -> mra, optional for sparql -> datalog)");
    tr->add_option("--db", tr_db, "database file (mra -> datalog)");
    tr->add_option("--goal", tr_goal, "goal predicate (datalog source)");
    tr->add_option("--graph-out", tr_graph_out,
                   "write the description graph here (datalog -> sparql)");
    tr->add_option("--db-out", tr_db_out,
                   "write the base relations here, expression to stdout (-> mra)");

    std::string norm_program;
    auto* norm = app.add_subcommand("normalize", "rewrite a program into the four rule shapes");
    norm->add_option("--program", norm_program, "program file")->required();

    std::string check_program;
    auto* check = app.add_subcommand("check", "report safety and recursion problems");
    check->add_option("--program", check_program, "program file")->required();

    bagsem::fuzz::FuzzConfig cfg;
    std::string pipeline = "all", fault = "none", out_dir;
    auto* fuzz = app.add_subcommand("fuzz", "run a differential equivalence campaign");
    fuzz->add_option("--seed", cfg.seed, "campaign seed");
    fuzz->add_option("--iters", cfg.iterations, "iterations per pipeline");
    fuzz->add_option("--pipeline", pipeline,
                     "sparql-datalog, sparql-mra, w3c-core, datalog-roundtrip or all");
    fuzz->add_option("--fault", fault, "fault injection for harness self-tests");
    fuzz->add_option("--max-triples", cfg.max_triples, "graph size bound");
    fuzz->add_option("--depth", cfg.max_pattern_depth, "pattern depth bound");
    fuzz->add_option("--out", out_dir, "directory for the JSON report and witnesses");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*eval) return cmd_eval(graph_file, query_file, format);
        if (*evdl) return cmd_eval_datalog(dl_program, dl_goal);
        if (*evmra) return cmd_eval_mra(mra_db, mra_expr);
        if (*tr)
            return cmd_translate(tr_from, tr_to, tr_in, tr_graph, tr_db, tr_goal,
                                 tr_graph_out, tr_db_out);
        if (*norm) return cmd_normalize(norm_program);
        if (*check) return cmd_check(check_program);
        if (*fuzz) {
            auto p = bagsem::fuzz::parse_pipeline(pipeline);
            if (!p) throw bagsem::ValidationError("unknown pipeline " + pipeline);
            auto f = bagsem::fuzz::parse_fault(fault);
            if (!f) throw bagsem::ValidationError("unknown fault " + fault);
            cfg.pipeline = *p;
            cfg.fault = *f;
            cfg.validate();
            return cmd_fuzz(cfg, out_dir);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}

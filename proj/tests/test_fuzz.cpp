#include <catch2/catch_amalgamated.hpp>

#include "bagsem/fuzz.hpp"
#include "bagsem/pattern_parser.hpp"

using namespace bagsem;
using fuzz::Fault;
using fuzz::FuzzConfig;
using fuzz::Pipeline;

TEST_CASE("pipeline and fault names round-trip") {
    for (Pipeline p : {Pipeline::SparqlDatalog, Pipeline::SparqlMra, Pipeline::W3cCore,
                       Pipeline::DatalogRoundtrip, Pipeline::All})
        CHECK(fuzz::parse_pipeline(fuzz::to_string(p)) == p);
    for (Fault f : {Fault::None, Fault::DropCompRule, Fault::SwapNullPadding,
                    Fault::JoinCountProduct, Fault::DropNormalizationCase,
                    Fault::UnionCountOffByOne})
        CHECK(fuzz::parse_fault(fuzz::to_string(f)) == f);
    CHECK_FALSE(fuzz::parse_pipeline("bogus").has_value());
    CHECK_FALSE(fuzz::parse_fault("bogus").has_value());
}

TEST_CASE("bad configurations are rejected") {
    FuzzConfig cfg;
    cfg.iterations = 0;
    CHECK_THROWS_AS(fuzz::run_equivalence_campaign(cfg), ValidationError);
    cfg.iterations = 1;
    cfg.max_triples = 0;
    CHECK_THROWS_AS(fuzz::run_equivalence_campaign(cfg), ValidationError);
}

TEST_CASE("operator weights steer generation") {
    gen::PatternGenConfig pcfg;
    pcfg.flavor = gen::PatternFlavor::W3c;
    pcfg.weights[sparql::GraphPattern::Kind::Union] = 0;
    std::function<bool(const sparql::PatternPtr&)> has_union =
        [&](const sparql::PatternPtr& p) {
            if (!p) return false;
            if (p->kind == sparql::GraphPattern::Kind::Union) return true;
            return has_union(p->left) || has_union(p->right);
        };
    for (uint64_t seed = 0; seed < 300; ++seed) {
        gen::Rng rng(50000 + seed);
        CHECK_FALSE(has_union(gen::gen_pattern(rng, pcfg)));
    }
}

TEST_CASE("clean campaigns find nothing") {
    FuzzConfig cfg;
    cfg.seed = 7;
    cfg.iterations = 40;
    cfg.pipeline = Pipeline::All;
    fuzz::CampaignReport r = fuzz::run_equivalence_campaign(cfg);
    CHECK(r.clean());
    CHECK(r.iterations == 40);
    // every iteration checks each of the four pipelines, the round trip twice
    CHECK(r.checks == 40 * 5);
}

TEST_CASE("campaigns are deterministic") {
    FuzzConfig cfg;
    cfg.seed = 99;
    cfg.iterations = 10;
    cfg.pipeline = Pipeline::All;
    std::string a = fuzz::render_report_json(fuzz::run_equivalence_campaign(cfg));
    std::string b = fuzz::render_report_json(fuzz::run_equivalence_campaign(cfg));
    CHECK(a == b);
    cfg.seed = 100;
    std::string c = fuzz::render_report_json(fuzz::run_equivalence_campaign(cfg));
    CHECK(a != c);
}

TEST_CASE("every seeded fault is caught") {
    for (Fault f : {Fault::DropCompRule, Fault::SwapNullPadding, Fault::JoinCountProduct,
                    Fault::DropNormalizationCase, Fault::UnionCountOffByOne}) {
        FuzzConfig cfg;
        cfg.seed = 3;
        cfg.iterations = 150;
        cfg.pipeline = Pipeline::All;
        cfg.fault = f;
        fuzz::CampaignReport r = fuzz::run_equivalence_campaign(cfg);
        INFO("fault " << fuzz::to_string(f));
        CHECK_FALSE(r.clean());
    }
}

TEST_CASE("shrunk witnesses still diverge when replayed") {
    FuzzConfig cfg;
    cfg.seed = 11;
    cfg.iterations = 100;
    cfg.pipeline = Pipeline::SparqlDatalog;
    cfg.fault = Fault::DropCompRule;
    fuzz::CampaignReport r = fuzz::run_equivalence_campaign(cfg);
    REQUIRE_FALSE(r.clean());

    const fuzz::Discrepancy& d = r.discrepancies.front();
    sparql::PatternPtr p = sparql::parse_pattern(d.shrunk_instance);
    rdf::Graph g = rdf::parse_graph(d.shrunk_data);
    CHECK(d.shrunk_data.size() <= d.data.size());

    translate::PatternTranslationOptions fault;
    fault.drop_comp_rule = true;
    auto got = translate::answers_to_mappings(
        translate::answers_on_graph(translate::sparql_to_datalog(p, fault), g));
    CHECK_FALSE(sparql::multiset_equal(got, sparql::evaluate(p, g)));
}

TEST_CASE("reports render as json") {
    FuzzConfig cfg;
    cfg.seed = 5;
    cfg.iterations = 5;
    cfg.pipeline = Pipeline::W3cCore;
    fuzz::CampaignReport r = fuzz::run_equivalence_campaign(cfg);
    std::string json = fuzz::render_report_json(r);
    CHECK(json.find("\"pipeline\": \"w3c-core\"") != std::string::npos);
    CHECK(json.find("\"fault\": \"none\"") != std::string::npos);
    CHECK(json.find("\"discrepancies\": []") != std::string::npos);
    CHECK(fuzz::render_report_text(r).find("0 discrepancies") != std::string::npos);
}

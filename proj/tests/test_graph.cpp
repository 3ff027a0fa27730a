#include <catch2/catch_amalgamated.hpp>

#include <sstream>

#include "covec/graph.hpp"
#include "covec/rng.hpp"

using namespace covec;

namespace {

FollowGraph graph_from(const std::string& text) {
    std::istringstream in(text);
    return load_edges(in);
}

FollowGraph random_graph(Rng& rng, std::size_t users, std::size_t accounts,
                         double p) {
    std::string text;
    for (std::size_t u = 0; u < users; ++u)
        for (std::size_t a = 0; a < accounts; ++a)
            if (rng.next_double() < p)
                text += "u" + std::to_string(u) + "\ta" + std::to_string(a) + "\n";
    return graph_from(text);
}

} // namespace

TEST_CASE("load_edges deduplicates") {
    auto g = graph_from("u1\ta\nu2\ta\nu1\tb\nu1\tb\n");
    REQUIRE(g.users.size() == 2);
    REQUIRE(g.num_edges == 3);
    REQUIRE(g.edges.at("u1").size() == 2);
}

TEST_CASE("load_edges empty file is an empty graph") {
    auto g = graph_from("");
    REQUIRE(g.users.empty());
    REQUIRE(g.num_edges == 0);
}

TEST_CASE("load_edges reports malformed lines with their number") {
    REQUIRE_THROWS_WITH(graph_from("u1\n"),
                        Catch::Matchers::ContainsSubstring("line 1"));
    REQUIRE_THROWS_WITH(graph_from("u1\ta\nu2\ta\tb\n"),
                        Catch::Matchers::ContainsSubstring("line 2"));
    REQUIRE_THROWS_AS(graph_from("u1\t\n"), ParseError);
}

TEST_CASE("compute_popularity counts followers") {
    auto g = graph_from("u1\ta\nu2\ta\nu1\tb\n");
    auto pop = compute_popularity(g);
    REQUIRE(pop.counts.at("a") == 2);
    REQUIRE(pop.counts.at("b") == 1);

    SECTION("empty graph gives empty table") {
        REQUIRE(compute_popularity(graph_from("")).counts.empty());
    }

    SECTION("fan account") {
        std::string text;
        for (int i = 0; i < 100; ++i)
            text += "u" + std::to_string(i) + "\tx\n";
        REQUIRE(compute_popularity(graph_from(text)).counts.at("x") == 100);
    }
}

TEST_CASE("select_entities strict threshold") {
    PopularityTable pop;
    pop.counts = {{"a", 2}, {"b", 1}};
    auto vocab = select_entities(pop, 1, /*inclusive=*/false);
    REQUIRE(vocab.size() == 1);
    REQUIRE(vocab.entities[0] == "a");
}

TEST_CASE("select_entities inclusive default keeps at-threshold accounts") {
    PopularityTable pop;
    pop.counts = {{"a", 2}, {"b", 1}};
    auto vocab = select_entities(pop, 1);
    REQUIRE(vocab.size() == 2);
}

TEST_CASE("select_entities orders by count then id") {
    PopularityTable pop;
    pop.counts = {{"b", 5}, {"a", 5}, {"c", 9}};
    auto vocab = select_entities(pop, 0);
    REQUIRE(vocab.entities == std::vector<std::string>{"c", "a", "b"});
    REQUIRE(vocab.index.at("a") == 1);
    REQUIRE(vocab.counts[0] == 9);
}

TEST_CASE("popularity counts sum to num_edges") {
    Rng rng(11);
    for (int trial = 0; trial < 20; ++trial) {
        auto g = random_graph(rng, 30, 20, 0.2);
        auto pop = compute_popularity(g);
        std::uint64_t sum = 0;
        for (const auto& [id, c] : pop.counts) {
            REQUIRE(c >= 1);
            sum += c;
        }
        REQUIRE(sum == g.num_edges);
    }
}

TEST_CASE("select_entities is monotone in the threshold") {
    Rng rng(12);
    auto g = random_graph(rng, 50, 25, 0.3);
    auto pop = compute_popularity(g);
    std::size_t prev = pop.counts.size() + 1;
    for (std::uint64_t k = 0; k < 20; ++k) {
        auto vocab = select_entities(pop, k);
        REQUIRE(vocab.size() <= prev);
        prev = vocab.size();
        for (std::size_t i = 0; i < vocab.size(); ++i) {
            REQUIRE(vocab.index.at(vocab.entities[i]) == i);
            REQUIRE(vocab.counts[i] >= k);
        }
    }
    REQUIRE(select_entities(pop, 0).size() == pop.counts.size());
}

TEST_CASE("vocabulary round trips through TSV") {
    PopularityTable pop;
    pop.counts = {{"alpha", 7}, {"beta", 3}, {"gamma", 3}};
    auto vocab = select_entities(pop, 0);
    auto path = std::string("vocab_roundtrip.tsv");
    save_vocabulary(vocab, path);
    auto loaded = load_vocabulary(path);
    REQUIRE(loaded.entities == vocab.entities);
    REQUIRE(loaded.counts == vocab.counts);
    REQUIRE(loaded.index == vocab.index);
    std::remove(path.c_str());
}

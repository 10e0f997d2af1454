#include <catch2/catch_amalgamated.hpp>

#include "newsagent/geoparse.hpp"
#include "test_util.hpp"

using namespace newsagent;

namespace {

const char* k_fixture_gazetteer =
    "name\talternates\tlatitude\tlongitude\tpopulation\tcountry\n"
    "Paris\t\t48.8566\t2.3522\t2100000\tFR\n"
    "Paris\t\t33.6609\t-95.5555\t25000\tUS\n"
    "New York\tNew York City,NYC\t40.7128\t-74.006\t8804000\tUS\n"
    "London\t\t51.5074\t-0.1278\t8982000\tGB\n"
    "London\t\t42.9849\t-81.2453\t383000\tCA\n"
    "Isle of Man\t\t54.2361\t-4.5481\t84000\tGB\n"
    "Nice\t\t43.7102\t7.262\t340000\tFR\n"
    "Evenville\t\t10.0\t20.0\t5000\tGB\n"
    "Evenville\t\t-10.0\t-20.0\t5000\tUS\n";

gazetteer fixture_gazetteer() {
    test_util::temp_dir dir;
    write_file(dir / "gaz.tsv", k_fixture_gazetteer);
    return load_gazetteer(dir / "gaz.tsv");
}

std::set<std::string> fixture_stoplist() { return {"nice", "of", "may", "march"}; }

}  // namespace

TEST_CASE("gazetteer loads names and alternates", "[geoparse]") {
    test_util::temp_dir dir;
    write_file(dir / "gaz.tsv",
               "name\talternates\tlatitude\tlongitude\tpopulation\tcountry\n"
               "New York\tNew York City,NYC\t40.7128\t-74.006\t8804000\tUS\n"
               "Oslo\t\t59.9139\t10.7522\t700000\tNO\n"
               "Lima\t\t-12.0464\t-77.0428\t10700000\tPE\n");
    gazetteer gaz = load_gazetteer(dir / "gaz.tsv");
    CHECK(gaz.size() == 3);
    CHECK(gaz.match("NYC").size() == 1);           // alternate
    CHECK(gaz.match("new york").size() == 1);      // case-folded
    CHECK(gaz.match("Nowhere").empty());
}

TEST_CASE("header-only gazetteer is empty and recognizes nothing", "[geoparse]") {
    test_util::temp_dir dir;
    write_file(dir / "gaz.tsv", "name\talternates\tlatitude\tlongitude\tpopulation\tcountry\n");
    gazetteer gaz = load_gazetteer(dir / "gaz.tsv");
    CHECK(gaz.size() == 0);
    CHECK(recognize_toponyms("London and Paris are cities.", gaz, {}).empty());
}

TEST_CASE("malformed gazetteer rows name the line", "[geoparse]") {
    test_util::temp_dir dir;
    write_file(dir / "bad_lat.tsv",
               "name\talternates\tlatitude\tlongitude\tpopulation\tcountry\n"
               "Fine\t\t10\t20\t100\tGB\n"
               "Broken\t\t123\t20\t100\tGB\n");
    try {
        load_gazetteer(dir / "bad_lat.tsv");
        FAIL("expected malformed_gazetteer");
    } catch (const malformed_gazetteer& e) {
        CHECK(std::string(e.what()).find("line 3") != std::string::npos);
    }

    write_file(dir / "bad_cols.tsv",
               "name\talternates\tlatitude\tlongitude\tpopulation\tcountry\n"
               "OnlyThree\t\t10\n");
    CHECK_THROWS_AS(load_gazetteer(dir / "bad_cols.tsv"), malformed_gazetteer);

    write_file(dir / "bad_pop.tsv",
               "name\talternates\tlatitude\tlongitude\tpopulation\tcountry\n"
               "Town\t\t10\t20\t-5\tGB\n");
    CHECK_THROWS_AS(load_gazetteer(dir / "bad_pop.tsv"), malformed_gazetteer);
}

TEST_CASE("recognition finds a multi-token name at its offset", "[geoparse]") {
    gazetteer gaz = fixture_gazetteer();
    std::string text = "The trial ran in New York last fall.";
    auto candidates = recognize_toponyms(text, gaz, fixture_stoplist());
    REQUIRE(candidates.size() == 1);
    CHECK(candidates[0].surface == "New York");
    CHECK(text.substr(candidates[0].offset, candidates[0].surface.size()) ==
          candidates[0].surface);
}

TEST_CASE("recognition returns nothing without capitalized matches", "[geoparse]") {
    gazetteer gaz = fixture_gazetteer();
    CHECK(recognize_toponyms("No places here.", gaz, fixture_stoplist()).empty());
    CHECK(recognize_toponyms("the new york times wrote", gaz, fixture_stoplist()).empty());
}

TEST_CASE("multiple candidates come back in text order", "[geoparse]") {
    gazetteer gaz = fixture_gazetteer();
    auto c = recognize_toponyms("London and Paris announced new centres.", gaz,
                                fixture_stoplist());
    REQUIRE(c.size() == 2);
    CHECK(c[0].surface == "London");
    CHECK(c[1].surface == "Paris");
    CHECK(c[0].offset < c[1].offset);
}

TEST_CASE("longest match wins at each position", "[geoparse]") {
    gazetteer gaz = fixture_gazetteer();
    auto c = recognize_toponyms("Crowds filled New York City avenues.", gaz, fixture_stoplist());
    REQUIRE(c.size() == 1);
    CHECK(c[0].surface == "New York City");  // alternate, longer than "New York"
    CHECK(c[0].match_key == "New York City");
}

TEST_CASE("internal of/the connectors join capitalized tokens", "[geoparse]") {
    gazetteer gaz = fixture_gazetteer();
    auto c = recognize_toponyms("A pilot on the Isle of Man began today.", gaz,
                                fixture_stoplist());
    REQUIRE(c.size() == 1);
    CHECK(c[0].surface == "Isle of Man");
}

TEST_CASE("punctuation between tokens splits a would-be name", "[geoparse]") {
    gazetteer gaz = fixture_gazetteer();
    auto c = recognize_toponyms("New. York is split by punctuation.", gaz, fixture_stoplist());
    CHECK(c.empty());
}

TEST_CASE("sentence-initial stoplist words are not candidates", "[geoparse]") {
    gazetteer gaz = fixture_gazetteer();
    auto excluded = recognize_toponyms("Nice results were reported today.", gaz,
                                       fixture_stoplist());
    CHECK(excluded.empty());
    auto kept = recognize_toponyms("Volunteers came from Nice yesterday.", gaz,
                                   fixture_stoplist());
    REQUIRE(kept.size() == 1);
    CHECK(kept[0].surface == "Nice");
    // after a sentence boundary the guard applies again
    auto after_period = recognize_toponyms("It worked. Nice effects everywhere.", gaz,
                                           fixture_stoplist());
    CHECK(after_period.empty());
}

TEST_CASE("resolution picks the highest population", "[geoparse]") {
    gazetteer gaz = fixture_gazetteer();
    auto c = recognize_toponyms("Delegates met in Paris today.", gaz, fixture_stoplist());
    REQUIRE(c.size() == 1);
    place_mention m = resolve_toponym(c[0], gaz);
    CHECK(m.resolved_name == "Paris");
    CHECK(m.latitude == 48.8566);  // the French entry, 2.1e6 over 2.5e4
    CHECK(m.longitude == 2.3522);
}

TEST_CASE("resolution of a single-entry match returns that entry", "[geoparse]") {
    gazetteer gaz = fixture_gazetteer();
    auto c = recognize_toponyms("Flights to Nice resumed in Nice.", gaz, fixture_stoplist());
    REQUIRE_FALSE(c.empty());
    place_mention m = resolve_toponym(c[0], gaz);
    CHECK(m.resolved_name == "Nice");
    CHECK(m.latitude == 43.7102);
}

TEST_CASE("population ties break on smallest country then name", "[geoparse]") {
    gazetteer gaz = fixture_gazetteer();
    toponym_candidate cand{"Evenville", 0, "Evenville"};
    place_mention m = resolve_toponym(cand, gaz);
    CHECK(m.latitude == 10.0);  // the GB entry beats US on country code
}

TEST_CASE("resolution is deterministic across calls", "[geoparse]") {
    gazetteer gaz = fixture_gazetteer();
    toponym_candidate cand{"London", 0, "London"};
    auto a = resolve_toponym(cand, gaz);
    auto b = resolve_toponym(cand, gaz);
    CHECK(a.resolved_name == b.resolved_name);
    CHECK(a.latitude == b.latitude);
    CHECK(a.longitude == b.longitude);
}

TEST_CASE("unresolvable candidates throw", "[geoparse]") {
    gazetteer gaz = fixture_gazetteer();
    toponym_candidate cand{"Atlantis", 0, "Atlantis"};
    CHECK_THROWS_AS(resolve_toponym(cand, gaz), unresolvable_toponym);
}

TEST_CASE("corpus geoparsing dedupes per article and keeps coordinates verbatim", "[geoparse]") {
    gazetteer gaz = fixture_gazetteer();
    std::vector<article> articles(3);
    articles[0].url = "u0";
    articles[0].title = "London update";
    articles[0].text = "London grew. Experts in London spoke. London again.";
    articles[1].url = "u1";
    articles[1].title = "No places";
    articles[1].text = "Nothing to see in this text.";
    articles[2].url = "u2";
    articles[2].title = "Two cities";
    articles[2].text = "Paris hosted the meeting while New York observed.";

    auto mentions = geoparse_corpus(articles, gaz, fixture_stoplist());
    REQUIRE(mentions.size() == 3);
    CHECK(mentions[0].article_url == "u0");
    CHECK(mentions[0].resolved_name == "London");
    CHECK(mentions[1].article_url == "u2");
    CHECK(mentions[1].resolved_name == "Paris");
    CHECK(mentions[2].resolved_name == "New York");

    // every coordinate exists verbatim in the gazetteer
    for (const auto& m : mentions) {
        bool found = false;
        for (size_t i = 0; i < gaz.size(); ++i)
            if (gaz.entry(i).latitude == m.latitude && gaz.entry(i).longitude == m.longitude)
                found = true;
        CHECK(found);
    }
}

TEST_CASE("empty corpus parses to nothing", "[geoparse]") {
    gazetteer gaz = fixture_gazetteer();
    CHECK(geoparse_corpus({}, gaz, fixture_stoplist()).empty());
}

TEST_CASE("mentions table round-trips through tsv", "[geoparse]") {
    std::vector<place_mention> mentions;
    mentions.push_back({"New York", "https://u/1", 40.7128, -74.006, "New York", 12});
    mentions.push_back({"Paris", "https://u/2", 48.8566, 2.3522, "Paris", 0});
    std::string tsv = mentions_to_tsv(mentions);
    CHECK(tsv.rfind("url\tsurface\tresolved_name\tlatitude\tlongitude\n", 0) == 0);
    auto back = mentions_from_tsv(tsv);
    REQUIRE(back.size() == 2);
    CHECK(back[0].article_url == "https://u/1");
    CHECK(back[0].latitude == Catch::Approx(40.7128));
    CHECK(back[1].resolved_name == "Paris");
}

TEST_CASE("the bundled gazetteer carries the anchor entries", "[geoparse]") {
    gazetteer gaz = load_gazetteer(test_util::repo_root() / "data" / "gazetteer.tsv");
    CHECK(gaz.size() >= 300);

    CHECK(gaz.match("London").size() >= 2);  // GB and Ontario
    place_mention london = resolve_toponym({"London", 0, "London"}, gaz);
    CHECK(london.latitude == 51.5074);
    CHECK(london.longitude == -0.1278);

    CHECK(gaz.match("Paris").size() >= 2);  // FR and Texas
    place_mention paris = resolve_toponym({"Paris", 0, "Paris"}, gaz);
    CHECK(paris.latitude == 48.8566);

    CHECK(gaz.match("Birmingham").size() >= 2);
    place_mention birmingham = resolve_toponym({"Birmingham", 0, "Birmingham"}, gaz);
    CHECK(birmingham.latitude == 52.4862);  // the larger UK city

    CHECK_FALSE(gaz.match("Isle of Man").empty());
    CHECK_FALSE(gaz.match("United States").empty());
    CHECK_FALSE(gaz.match("NYC").empty());
}

TEST_CASE("recognition is offset-sound on the bundled gazetteer", "[geoparse]") {
    auto root = test_util::repo_root();
    gazetteer gaz = load_gazetteer(root / "data" / "gazetteer.tsv");
    auto stoplist = load_stoplist(root / "data" / "toponym_stoplist.txt");
    std::string text =
        "Experts from the United States and the United Kingdom met in Geneva. "
        "May brought new funding. Teams in Birmingham and Washington joined by video.";
    for (const auto& c : recognize_toponyms(text, gaz, stoplist)) {
        CHECK(text.substr(c.offset, c.surface.size()) == c.surface);
        CHECK_FALSE(resolve_toponym(c, gaz).resolved_name.empty());
    }
}

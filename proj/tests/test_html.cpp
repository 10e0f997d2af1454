#include <catch2/catch_amalgamated.hpp>

#include "newsagent/html.hpp"
#include "test_util.hpp"

using namespace newsagent;

TEST_CASE("block elements become paragraph breaks", "[html]") {
    auto doc = extract_text(
        "<html><body><p>Hello to the wide world.</p><p>Second paragraph follows.</p>"
        "</body></html>");
    CHECK(doc.text == "Hello to the wide world.\n\nSecond paragraph follows.");
}

TEST_CASE("inline markup collapses to spaced text", "[html]") {
    auto doc = extract_text(
        "<p>Memory <b>loss</b> and   <i>confusion</i><br>are early &amp; common signs.</p>");
    CHECK(doc.text == "Memory loss and confusion\nare early & common signs.");
}

TEST_CASE("script style nav and footer subtrees are removed", "[html]") {
    auto doc = extract_text(
        "<html><head><title>Story Title</title><style>p{color:red}</style></head><body>"
        "<nav><ul><li>Home</li><li>Menu item</li></ul></nav>"
        "<p>Real article prose, long enough to keep.</p>"
        "<script>var menu = 'Sections'; if (1 < 2) { track(); }</script>"
        "<footer>Subscribe to the newsletter</footer></body></html>");
    CHECK(doc.title == "Story Title");
    CHECK(doc.text == "Real article prose, long enough to keep.");
    CHECK(doc.text.find("Menu") == std::string::npos);
    CHECK(doc.text.find("Subscribe") == std::string::npos);
    CHECK(doc.text.find("track") == std::string::npos);
}

TEST_CASE("script-only document raises empty_document", "[html]") {
    CHECK_THROWS_AS(extract_text("<script>window.x = 'only code here';</script>"),
                    empty_document);
    CHECK_THROWS_AS(extract_text(""), empty_document);
    CHECK_THROWS_AS(extract_text("<p>too short</p>"), empty_document);
}

TEST_CASE("title falls back to the first h1", "[html]") {
    auto doc = extract_text(
        "<body><h1>Heading As Title</h1><p>Body prose that is long enough to count.</p></body>");
    CHECK(doc.title == "Heading As Title");
    CHECK(doc.text.find("Heading As Title") == 0);  // the h1 is still body prose
}

TEST_CASE("entities decode including numeric forms", "[html]") {
    auto doc = extract_text(
        "<p>Research &quot;update&quot;: amyloid&#160;plaques &lt;tracked&gt; &#x41;repeat</p>");
    CHECK(doc.text == "Research \"update\": amyloid plaques <tracked> Arepeat");
}

TEST_CASE("no markup survives extraction", "[html]") {
    const char* nasty[] = {
        "<p>a < b and c<d> but <e attr='<'>long enough text here</e></p>",
        "<div>unclosed <b>tags <p>and <span>nesting everywhere long enough</div>",
        "<p>comment <!-- <b>hidden</b> --> and <![CDATA[ <x> ]]> cdata long enough</p>",
    };
    for (const char* html : nasty) {
        auto doc = extract_text(html);
        for (size_t i = 0; i + 1 < doc.text.size(); ++i) {
            bool tag_like = doc.text[i] == '<' &&
                            std::isalpha(static_cast<unsigned char>(doc.text[i + 1]));
            CHECK_FALSE(tag_like);
        }
    }
}

TEST_CASE("fixture corpus extraction never leaks markup", "[html]") {
    auto www = test_util::repo_root() / "fixtures" / "www";
    REQUIRE(std::filesystem::exists(www));
    int checked = 0;
    for (const auto& entry : std::filesystem::recursive_directory_iterator(www)) {
        if (!entry.is_regular_file()) continue;
        auto doc = extract_text(read_file(entry.path()));
        for (size_t i = 0; i + 1 < doc.text.size(); ++i) {
            bool tag_like = doc.text[i] == '<' &&
                            std::isalpha(static_cast<unsigned char>(doc.text[i + 1]));
            if (tag_like) FAIL("markup survived in " << entry.path().string());
        }
        ++checked;
    }
    CHECK(checked >= 24);  // 20 articles + 4 index pages
}

TEST_CASE("anchor listing preserves document order", "[html]") {
    auto scan = list_anchors(
        "<a href='/one.html'>1</a> text <a name='x'>no href</a>"
        "<a href=\"/two.html\">2</a><a href='  '>blank</a><a href='/one.html#frag'>dup</a>");
    CHECK(scan.anchors_seen == 5);
    CHECK(scan.hrefs == std::vector<std::string>{"/one.html", "/two.html", "/one.html#frag"});
}

TEST_CASE("pub date cascade rule 1: meta article:published_time", "[html]") {
    auto d = extract_pub_date(
        "<head><meta property=\"article:published_time\" content=\"2022-09-14T10:00:00Z\">"
        "</head><body><p>Posted October 1, 2001, ignored.</p></body>",
        "https://site.org/story.html");
    CHECK(d == civil_date{2022, 9, 14});
}

TEST_CASE("pub date cascade rule 2: time element datetime", "[html]") {
    auto d = extract_pub_date(
        "<body><time datetime=\"2023-02-07T08:00:00Z\">last month</time><p>text</p></body>",
        "https://site.org/story.html");
    CHECK(d == civil_date{2023, 2, 7});
}

TEST_CASE("pub date cascade rule 3: date pattern in the url path", "[html]") {
    auto d = extract_pub_date("<p>No dates anywhere in this body text.</p>",
                              "https://site.org/news/2023/05/02/story.html");
    CHECK(d == civil_date{2023, 5, 2});
    auto dashed = extract_pub_date("<p>No dates in body.</p>",
                                   "https://site.org/news/2023-05-02-story.html");
    CHECK(dashed == civil_date{2023, 5, 2});
    // digits in the query string are not the path
    auto none = extract_pub_date("<p>No dates in body.</p>",
                                 "https://site.org/story.html?d=2023/05/02");
    CHECK_FALSE(none);
}

TEST_CASE("pub date cascade rule 4: first date string in early text", "[html]") {
    auto iso = extract_pub_date("<p>Published 2022-11-30 by the newsroom.</p>",
                                "https://site.org/story.html");
    CHECK(iso == civil_date{2022, 11, 30});
    auto monthname = extract_pub_date("<p>Published March 21, 2023. Enrollment closed.</p>",
                                      "https://site.org/story.html");
    CHECK(monthname == civil_date{2023, 3, 21});
    auto abbrev = extract_pub_date("<p>Posted Sept 9, 2022 in the health desk.</p>",
                                   "https://site.org/story.html");
    CHECK(abbrev == civil_date{2022, 9, 9});
    // beyond the first 2000 characters the scan gives up
    std::string far = "<p>" + std::string(2100, 'x') + " 2022-11-30</p>";
    CHECK_FALSE(extract_pub_date(far, "https://site.org/story.html"));
}

TEST_CASE("pub date absence and invalid candidates", "[html]") {
    CHECK_FALSE(extract_pub_date("<p>No date anywhere in this prose.</p>",
                                 "https://site.org/story.html"));
    // invalid calendar dates fall through
    auto d = extract_pub_date(
        "<meta property=\"article:published_time\" content=\"2022-13-40\">"
        "<p>Published 2022-10-31 instead.</p>",
        "https://site.org/story.html");
    CHECK(d == civil_date{2022, 10, 31});
    // year-only mentions do not count
    CHECK_FALSE(extract_pub_date("<p>Back in 2019 the cohort formed. New wave in 2021.</p>",
                                 "https://site.org/story.html"));
}

TEST_CASE("meta date wins over body text date", "[html]") {
    auto d = extract_pub_date(
        "<meta property=\"article:published_time\" content=\"2022-06-14T09:30:00Z\">"
        "<p>Updated January 2, 2023 with corrections.</p>",
        "https://site.org/2001/01/01/old.html");
    CHECK(d == civil_date{2022, 6, 14});
}

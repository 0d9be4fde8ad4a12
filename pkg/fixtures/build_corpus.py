#!/usr/bin/env python3
"""Regenerates the bundled fixture corpus (search files, pages, page map).

The corpus is committed; run this only when the page content needs to
change. Page texts are co-designed with the deterministic mock backends:
the first page of every (sub)topic opens with the facts whose capitalized
entities seed the next subtopic level.
"""

import json
from pathlib import Path

ROOT = Path(__file__).resolve().parent / "corpus"


def slugify(text):
    import re

    return "_".join(re.findall(r"[a-z0-9]+", text.lower()))


# topic -> (subtopic_rich, subtopic_thin, depth2_entity, page sentence lists)
TOPICS = {
    "Calder Valley Music Festival": {
        "s1": "Briarwood Amphitheatre",
        "s2": "Lanternlight Parade",
        "d2": "Kestrel Sound Stage",
        "root_pages": [
            [
                "The Calder Valley Music Festival began in 1978 as a village fair.",
                "The Briarwood Amphitheatre hosts the main stage of the Calder Valley Music Festival.",
                "The Lanternlight Parade closes every edition of the Calder Valley Music Festival.",
                "The Calder Valley Music Festival now draws about 40,000 visitors each July.",
                "Ticket sales from the Calder Valley Music Festival fund village halls.",
            ],
            [
                "The Calder Valley Music Festival moved to a three day format in 1994.",
                "Folk singers opened the first Calder Valley Music Festival under canvas.",
                "The Calder Valley Music Festival banned glass bottles after 1989.",
                "Local farms supply all food stalls at the Calder Valley Music Festival.",
            ],
            [
                "Rain flooded the Calder Valley Music Festival campsite in 2007.",
                "Volunteers rebuilt the Calder Valley Music Festival footbridges in one week.",
                "The Calder Valley Music Festival donated 120,000 pounds to flood relief.",
                "A memorial oak at the Calder Valley Music Festival honors its founders.",
            ],
            [
                "The Calder Valley Music Festival grew from a single brass band contest.",
                "Mill workers started the contest that became the Calder Valley Music Festival.",
                "The Calder Valley Music Festival adopted its current name in 1982.",
                "Archive posters of the Calder Valley Music Festival hang in the town library.",
            ],
            [
                "Radio coverage of the Calder Valley Music Festival started in 1986.",
                "A vinyl box set collects early Calder Valley Music Festival recordings.",
                "The Calder Valley Music Festival streams its main stage since 2019.",
                "Students film the Calder Valley Music Festival for course credit.",
            ],
            [
                "The Calder Valley Music Festival elects a new director every four years.",
                "Its charter forbids the Calder Valley Music Festival from corporate naming.",
                "The Calder Valley Music Festival employs twelve people year round.",
                "Surplus from the Calder Valley Music Festival seeds winter concerts.",
            ],
        ],
        "s1_pages": [
            [
                "The Briarwood Amphitheatre was carved into a hillside in 1921.",
                "The Kestrel Sound Stage sits beside the Briarwood Amphitheatre orchard wall.",
                "The Briarwood Amphitheatre served as a quarry shelter during the war.",
                "The Briarwood Amphitheatre seats 4,200 people across the Millstone Terraces.",
                "Stone for the Millstone Terraces came from the valley quarry.",
            ],
            [
                "Acoustic tests rank the Briarwood Amphitheatre among the best open venues.",
                "The resident Westcote Choir sings unamplified at the Briarwood Amphitheatre.",
                "Engineers added drainage under the Briarwood Amphitheatre in 1963.",
                "Members of the Westcote Choir rehearse at the Briarwood Amphitheatre each Friday.",
            ],
            [
                "The Briarwood Amphitheatre hosts dawn rehearsals during festival week.",
                "Stagehands reach the Briarwood Amphitheatre by a sunken lane.",
                "The Briarwood Amphitheatre curfew rings at half past ten.",
                "Summer concerts on the Millstone Terraces sell out within hours.",
            ],
            [
                "A 1921 plaque names the Briarwood Amphitheatre masons.",
                "The Briarwood Amphitheatre appears in three feature films.",
                "Recordings of the Westcote Choir at the Briarwood Amphitheatre won a radio prize.",
                "The Briarwood Amphitheatre lawn doubles as a fair ground.",
            ],
        ],
        "s2_pages": [
            [
                "The Lanternlight Parade first wound through town in 1981.",
                "Children build willow lanterns for the Lanternlight Parade all autumn.",
                "The Lanternlight Parade follows the canal towpath after dusk.",
                "Brass bands lead the Lanternlight Parade in rotating order.",
            ],
            [
                "The Lanternlight Parade uses only candle light by tradition.",
                "Marshals walk the Lanternlight Parade route with sand buckets.",
                "The Lanternlight Parade pauses at the weir for a fire poem.",
            ],
            [
                "About 6,000 people line the Lanternlight Parade each year.",
                "The Lanternlight Parade ends with lanterns floated on the mill pond.",
                "Prizes at the Lanternlight Parade favor recycled materials.",
            ],
        ],
        "d2_pages": [
            [
                "The Kestrel Sound Stage opened for electronic acts in 2015.",
                "Solar panels power the Kestrel Sound Stage rigs.",
                "The Kestrel Sound Stage takes its name from nesting kestrels.",
                "Designers built the Kestrel Sound Stage from shipping containers.",
            ],
            [
                "The Kestrel Sound Stage curfew extends to midnight on Saturdays.",
                "A turf roof cools the Kestrel Sound Stage green room.",
                "The Kestrel Sound Stage books forty acts across a weekend.",
            ],
        ],
    },
    "Port Meridian Lighthouse": {
        "s1": "Gullwing Signal Tower",
        "s2": "Harbour Beacon Trust",
        "d2": "Fresnel Optics Workshop",
        "root_pages": [
            [
                "The Port Meridian Lighthouse first lit the channel in 1854.",
                "The Gullwing Signal Tower relayed storm flags to the Port Meridian Lighthouse.",
                "The Harbour Beacon Trust maintains the Port Meridian Lighthouse today.",
                "The Port Meridian Lighthouse stands 38 metres above the spring tide line.",
                "Sailors call the Port Meridian Lighthouse the Grey Candle.",
            ],
            [
                "The Port Meridian Lighthouse was automated in 1963.",
                "Three keeper families shared the Port Meridian Lighthouse cottages.",
                "The Port Meridian Lighthouse foghorn sounded two blasts every minute.",
                "Supply boats reached the Port Meridian Lighthouse twice a month.",
            ],
            [
                "Granite for the Port Meridian Lighthouse came by barge from Aberdeen.",
                "The Port Meridian Lighthouse survived the 1897 gale unharmed.",
                "Engineers doubled the Port Meridian Lighthouse lamp power in 1911.",
                "The Port Meridian Lighthouse beam reaches 21 nautical miles.",
            ],
            [
                "A spiral of 199 steps climbs the Port Meridian Lighthouse.",
                "The Port Meridian Lighthouse gallery opens to visitors in summer.",
                "Volunteers repainted the Port Meridian Lighthouse bands in 2018.",
                "The Port Meridian Lighthouse appears on the port's coat of arms.",
            ],
            [
                "The Port Meridian Lighthouse logbooks span 109 years.",
                "A museum case shows the Port Meridian Lighthouse original burner.",
                "Radio beacons replaced the Port Meridian Lighthouse bell in 1932.",
                "The Port Meridian Lighthouse lens floats on a mercury bath.",
            ],
            [
                "Storm shutters guard the Port Meridian Lighthouse lantern room.",
                "The Port Meridian Lighthouse generator house burned in 1949.",
                "Divers mapped the reefs around the Port Meridian Lighthouse in 2002.",
                "The Port Meridian Lighthouse marks the eastern fairway turn.",
            ],
        ],
        "s1_pages": [
            [
                "The Gullwing Signal Tower predates the harbour by forty years.",
                "The Fresnel Optics Workshop ground lenses for the Gullwing Signal Tower.",
                "The Gullwing Signal Tower flew cones to warn of gales.",
                "Semaphore drills at the Gullwing Signal Tower ran every Sunday.",
                "The Gullwing Signal Tower closed to shipping traffic in 1921.",
            ],
            [
                "Coastguards manned the Gullwing Signal Tower around the clock.",
                "The Gullwing Signal Tower kept a rocket brigade for wrecks.",
                "A heliograph on the Gullwing Signal Tower reached passing ships.",
                "The Gullwing Signal Tower stands on a chalk headland.",
            ],
            [
                "The Gullwing Signal Tower now houses a tide gauge.",
                "Birders use the Gullwing Signal Tower to count migrating terns.",
                "The Gullwing Signal Tower balcony survives from 1812.",
                "Schools visit the Gullwing Signal Tower each spring term.",
            ],
            [
                "Restorers rebuilt the Gullwing Signal Tower mast in oak.",
                "The Gullwing Signal Tower flag locker held ninety pennants.",
                "Lightning rods crown the Gullwing Signal Tower since 1888.",
                "The Gullwing Signal Tower archive lists 3,400 logged signals.",
            ],
        ],
        "s2_pages": [
            [
                "The Harbour Beacon Trust formed after the 1963 automation.",
                "Donations fund the Harbour Beacon Trust paint and glass.",
                "The Harbour Beacon Trust trains volunteer lamp keepers.",
                "Membership of the Harbour Beacon Trust passed 2,000 in 2020.",
            ],
            [
                "The Harbour Beacon Trust publishes a quarterly tide almanac.",
                "School grants from the Harbour Beacon Trust pay for ferry visits.",
                "The Harbour Beacon Trust archives keeper diaries online.",
            ],
            [
                "The Harbour Beacon Trust leases the cottages as holiday lets.",
                "Lease income lets the Harbour Beacon Trust waive entry fees.",
                "The Harbour Beacon Trust hosts a carol service in the lamp room.",
            ],
        ],
        "d2_pages": [
            [
                "The Fresnel Optics Workshop opened beside the dry dock in 1849.",
                "Apprentices at the Fresnel Optics Workshop trained for seven years.",
                "The Fresnel Optics Workshop cut prisms with river-powered laths.",
                "Four lighthouses still carry Fresnel Optics Workshop lenses.",
            ],
            [
                "The Fresnel Optics Workshop ledger records 212 commissions.",
                "A fire spared the Fresnel Optics Workshop grinding hall in 1902.",
                "The Fresnel Optics Workshop closed when acrylic optics arrived.",
            ],
        ],
    },
    "Tilbury Glassworks Museum": {
        "s1": "Crucible Furnace Hall",
        "s2": "Amber Crane Collection",
        "d2": "Molten Colour Archive",
        "root_pages": [
            [
                "The Tilbury Glassworks Museum occupies the original 1861 factory floor.",
                "The Crucible Furnace Hall anchors the Tilbury Glassworks Museum tour.",
                "The Amber Crane Collection came to the Tilbury Glassworks Museum by bequest.",
                "The Tilbury Glassworks Museum logged 85,000 visitors in 2023.",
                "Glassblowers demonstrate daily at the Tilbury Glassworks Museum.",
            ],
            [
                "The Tilbury Glassworks Museum opened to the public in 1979.",
                "Dockers founded the works that became the Tilbury Glassworks Museum.",
                "The Tilbury Glassworks Museum saved the site from demolition.",
                "A heritage grant rewired the Tilbury Glassworks Museum in 1998.",
            ],
            [
                "The Tilbury Glassworks Museum holds 12,000 catalogued pieces.",
                "Conservators at the Tilbury Glassworks Museum repair canal finds.",
                "The Tilbury Glassworks Museum lends bottles to film productions.",
                "School workshops at the Tilbury Glassworks Museum sell out yearly.",
            ],
            [
                "The Tilbury Glassworks Museum shop sells seconds from the demonstrations.",
                "Friends of the Tilbury Glassworks Museum number about 900.",
                "The Tilbury Glassworks Museum cafe occupies the old packing shed.",
                "Night tours of the Tilbury Glassworks Museum run each October.",
            ],
            [
                "The Tilbury Glassworks Museum archive keeps 1870s order books.",
                "Researchers trace trade routes through Tilbury Glassworks Museum invoices.",
                "The Tilbury Glassworks Museum digitised its ledgers in 2015.",
                "A quarter of Tilbury Glassworks Museum funding is municipal.",
            ],
            [
                "The Tilbury Glassworks Museum chimney is a listed structure.",
                "Swifts nest in the Tilbury Glassworks Museum chimney each summer.",
                "The Tilbury Glassworks Museum won the regional heritage prize twice.",
                "Volunteers give 9,000 hours to the Tilbury Glassworks Museum yearly.",
            ],
        ],
        "s1_pages": [
            [
                "The Crucible Furnace Hall kept four pots at white heat.",
                "The Molten Colour Archive began as Crucible Furnace Hall test plates.",
                "The Crucible Furnace Hall roof vents draw like organ pipes.",
                "Masons lined the Crucible Furnace Hall with fire brick from Stourbridge.",
                "The Crucible Furnace Hall floor still shows gather marks.",
            ],
            [
                "Teams of five worked each Crucible Furnace Hall pot.",
                "The Crucible Furnace Hall bell marked four-hour shifts.",
                "Apprentices swept the Crucible Furnace Hall before dawn.",
                "Summer heat in the Crucible Furnace Hall topped 45 degrees.",
            ],
            [
                "The Crucible Furnace Hall last fired commercially in 1968.",
                "A demonstration pot in the Crucible Furnace Hall relit in 1984.",
                "The Crucible Furnace Hall hosts an annual blowers reunion.",
                "Acoustic baffles hide in the Crucible Furnace Hall rafters.",
            ],
            [
                "The Crucible Furnace Hall cranes lifted 300 kilogram pots.",
                "Engineers preserved the Crucible Furnace Hall flue dampers.",
                "The Crucible Furnace Hall gallery overlooks the working floor.",
                "Paintings of the Crucible Furnace Hall hang in the city gallery.",
            ],
        ],
        "s2_pages": [
            [
                "The Amber Crane Collection holds 640 pieces of amber tableware.",
                "Shipping heir Edwin Crane assembled the Amber Crane Collection.",
                "The Amber Crane Collection travelled to four countries before settling.",
                "Insurers value the Amber Crane Collection at 2.3 million pounds.",
            ],
            [
                "The Amber Crane Collection centrepiece is a swan epergne.",
                "Catalogues of the Amber Crane Collection list every mould number.",
                "The Amber Crane Collection rotates quarterly under low light.",
            ],
            [
                "Students sketch the Amber Crane Collection on open Fridays.",
                "The Amber Crane Collection inspired a modern reissue line.",
                "A bequest clause keeps the Amber Crane Collection together.",
            ],
        ],
        "d2_pages": [
            [
                "The Molten Colour Archive stores 5,100 numbered colour rods.",
                "Chemists coded every Molten Colour Archive rod by oxide mix.",
                "The Molten Colour Archive recipes date from 1872 to 1968.",
                "Restorers match Victorian panes from the Molten Colour Archive.",
            ],
            [
                "The Molten Colour Archive survived the 1941 raids in a cellar.",
                "A database cross-links the Molten Colour Archive to order books.",
                "The Molten Colour Archive reading room seats six researchers.",
            ],
        ],
    },
}


def page_html(title, sentences):
    paragraphs = "\n".join(f"  <p>{s}</p>" for s in sentences)
    return (
        "<html>\n<head><title>{t}</title>\n"
        "<style>body {{ font: serif }}</style>\n"
        "<script>var tracker = 'ignored';</script>\n"
        "</head>\n<body>\n<nav>Home | About | Archive</nav>\n"
        "{p}\n<footer>Archived copy.</footer>\n</body>\n</html>\n"
    ).format(t=title, p=paragraphs)


def build():
    search_dir = ROOT / "search"
    pages_dir = ROOT / "pages"
    search_dir.mkdir(parents=True, exist_ok=True)
    pages_dir.mkdir(parents=True, exist_ok=True)
    page_map = {}

    def add_page(name, title, sentences):
        filename = f"{name}.html"
        (pages_dir / filename).write_text(page_html(title, sentences), encoding="utf-8")
        url = f"http://fixture.test/{filename}"
        page_map[url] = f"pages/{filename}"
        return url

    def add_search(query, urls):
        (search_dir / f"{slugify(query)}.txt").write_text(
            "\n".join(urls) + "\n", encoding="utf-8"
        )

    for topic, spec in TOPICS.items():
        tslug = slugify(topic)
        root_urls = [
            add_page(f"{tslug}_r{i}", f"{topic} — notes {i}", sents)
            for i, sents in enumerate(spec["root_pages"], start=1)
        ]
        add_search(topic, root_urls[:3])
        add_search(f"{topic} history", root_urls[3:])

        s1_urls = [
            add_page(f"{tslug}_s1_{i}", f"{spec['s1']} — notes {i}", sents)
            for i, sents in enumerate(spec["s1_pages"], start=1)
        ]
        add_search(spec["s1"], s1_urls[:3])
        add_search(f"{spec['s1']} history", s1_urls[3:])

        s2_urls = [
            add_page(f"{tslug}_s2_{i}", f"{spec['s2']} — notes {i}", sents)
            for i, sents in enumerate(spec["s2_pages"], start=1)
        ]
        add_search(spec["s2"], s2_urls)

        d2_urls = [
            add_page(f"{tslug}_d2_{i}", f"{spec['d2']} — notes {i}", sents)
            for i, sents in enumerate(spec["d2_pages"], start=1)
        ]
        add_search(spec["d2"], d2_urls)

    (ROOT / "page_map.json").write_text(
        json.dumps(page_map, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    print(f"{len(page_map)} pages, {len(list(search_dir.glob('*.txt')))} search files")


if __name__ == "__main__":
    build()

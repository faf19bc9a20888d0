#!/usr/bin/env python3
"""Regenerates packs/demo-computing.json from the fact tables below.

Each fact yields one recall question (L1), one recognition question (L2) and,
for the first few facts of a section, one scenario question (L3). Distractors
come from the other facts of the same section; the one named in `confused`
carries the fact's misconception tag.
"""
import json
import pathlib
import random

STYLES = ["SS", "GOA", "EIA", "CA", "DLA"]

# term, definition, scenario, confused-with term, misconception tag
CONCEPTS = [
    {
        "id": "hardware",
        "title": "Computer hardware",
        "key": "cpu-memory",
        "sections": [
            ("cpu-memory", "Processor and memory", [
                ("CPU", "the component that fetches and executes program instructions",
                 "A spreadsheet recalculates a large formula and the fan speeds up", "RAM", "memory-computes"),
                ("RAM", "fast working memory that loses its contents when power is cut",
                 "An unsaved essay disappears after a power cut", "SSD", "ram-is-storage"),
                ("cache", "a small, very fast memory close to the processor",
                 "Opening the same file twice is noticeably quicker the second time", "RAM", "cache-is-ram"),
                ("clock speed", "the number of cycles a processor performs each second",
                 "Two otherwise identical laptops differ only in GHz rating", "core count", "clock-is-cores"),
                ("core count", "how many independent processing units a CPU contains",
                 "A video export runs several encoding tasks at the same time", "clock speed", "cores-are-clock"),
                ("register", "a tiny storage slot inside the CPU used during a single instruction",
                 "An addition needs both operands held directly inside the processor", "cache", "register-is-cache"),
            ]),
            ("storage", "Storage devices", [
                ("SSD", "flash-based storage with no moving parts",
                 "A laptop boots quickly and survives being knocked while running", "HDD", "ssd-is-spinning"),
                ("HDD", "magnetic storage that reads data from spinning platters",
                 "An old desktop makes a clicking sound while loading a game", "SSD", "hdd-is-flash"),
                ("capacity", "the total amount of data a device can hold",
                 "A phone refuses to save more photos", "transfer rate", "capacity-is-speed"),
                ("transfer rate", "how much data a device can move per second",
                 "Copying a film to a USB stick takes ten minutes", "capacity", "speed-is-capacity"),
                ("file system", "the scheme that organises stored data into files and folders",
                 "A drive formatted on one computer cannot be read on another", "partition", "fs-is-partition"),
                ("partition", "a separately managed region of a storage device",
                 "One physical disk shows up as two drive letters", "file system", "partition-is-fs"),
            ]),
            ("peripherals", "Input and output devices", [
                ("input device", "hardware that sends data into the computer",
                 "A scanner turns a paper form into an image file", "output device", "input-output-swap"),
                ("output device", "hardware that presents results from the computer",
                 "A printer produces a paper copy of a report", "input device", "output-input-swap"),
                ("port", "a physical socket used to connect external devices",
                 "A keyboard will not work until it is plugged into the USB socket", "driver", "port-is-driver"),
                ("driver", "software that lets the operating system control a device",
                 "A new printer is connected but nothing prints until an installer runs", "port", "driver-is-port"),
                ("touchscreen", "a display that is also an input device",
                 "A tablet is used without a keyboard or mouse", "output device", "touch-is-output-only"),
                ("resolution", "the number of pixels a display shows",
                 "Text looks sharper on one monitor than on another of the same size", "refresh rate", "resolution-is-refresh"),
            ]),
        ],
    },
    {
        "id": "software",
        "title": "Software and operating systems",
        "key": "os",
        "sections": [
            ("os", "The operating system", [
                ("operating system", "the software that manages hardware and runs other programs",
                 "Windows, macOS and Linux all start before any application", "application", "os-is-app"),
                ("kernel", "the core of the operating system with full control of the hardware",
                 "A crash in the lowest layer of the OS brings the whole machine down", "shell", "kernel-is-shell"),
                ("process", "a program that is currently running",
                 "The task manager lists a browser three times", "file", "process-is-file"),
                ("multitasking", "switching the CPU between several processes so they appear to run together",
                 "Music keeps playing while a document is edited", "multiprocessing", "multitask-needs-cores"),
                ("virtual memory", "disk space the OS uses to extend RAM",
                 "A computer with little RAM slows down badly when many tabs are open", "cache", "vm-is-cache"),
                ("shell", "the program that interprets typed or clicked commands for the OS",
                 "A user types a command to list the files in a folder", "kernel", "shell-is-kernel"),
            ]),
            ("applications", "Application software", [
                ("application", "a program that helps the user do a specific task",
                 "A student writes an essay in a word processor", "operating system", "app-is-os"),
                ("installer", "a program that copies and configures another program",
                 "A setup wizard asks where to put a new game", "update", "installer-is-update"),
                ("update", "a newer release that fixes or improves installed software",
                 "A phone app asks to restart after downloading a security fix", "installer", "update-is-installer"),
                ("licence", "the terms under which software may be used",
                 "A school must pay for each copy of a design program it uses", "source code", "licence-is-code"),
                ("open source", "software whose source code is published for anyone to study and change",
                 "A volunteer fixes a bug in a public project and shares the change", "freeware", "open-is-free-of-charge"),
                ("freeware", "software given away at no cost but without its source code",
                 "A free game can be downloaded but not modified", "open source", "free-is-open"),
            ]),
            ("programs", "How programs are made", [
                ("source code", "human-readable program instructions written by a programmer",
                 "A programmer edits text files before building an app", "machine code", "source-runs-directly"),
                ("machine code", "binary instructions the CPU can execute directly",
                 "A program is turned into numbers the processor understands", "source code", "machine-is-source"),
                ("compiler", "a program that translates source code into machine code before it runs",
                 "A build step turns a project into an executable file", "interpreter", "compiler-is-interpreter"),
                ("interpreter", "a program that executes source code line by line as it runs",
                 "A script runs without a separate build step", "compiler", "interpreter-is-compiler"),
                ("bug", "a mistake in a program that makes it behave incorrectly",
                 "A calculator app shows 2 + 2 = 5", "virus", "bug-is-malware"),
                ("algorithm", "a precise sequence of steps for solving a problem",
                 "A recipe-like list describes how to sort names alphabetically", "program", "algorithm-is-code"),
            ]),
        ],
    },
    {
        "id": "networks",
        "title": "Networks and the internet",
        "key": "internet",
        "sections": [
            ("internet", "How the internet works", [
                ("internet", "the worldwide network of interconnected computer networks",
                 "A message crosses several countries' networks to reach a friend", "web", "internet-is-web"),
                ("web", "the collection of linked pages accessed through browsers",
                 "A user follows a link from one page to another", "internet", "web-is-internet"),
                ("IP address", "a numeric label that identifies a device on a network",
                 "A router lists each connected phone by a number like 192.168.1.7", "domain name", "ip-is-domain"),
                ("domain name", "a human-readable name that maps to an IP address",
                 "A user types example.org instead of a string of numbers", "IP address", "domain-is-ip"),
                ("DNS", "the system that translates domain names into IP addresses",
                 "Sites open by number but not by name", "router", "dns-is-router"),
                ("packet", "a small unit of data sent separately across a network",
                 "Parts of one download arrive by different routes", "file", "packet-is-file"),
            ]),
            ("local", "Local networks", [
                ("router", "a device that forwards traffic between networks",
                 "A home network connects to the provider through one box", "switch", "router-is-switch"),
                ("switch", "a device that connects machines within one local network",
                 "Ten office desktops plug into one box with many sockets", "router", "switch-is-router"),
                ("Wi-Fi", "wireless local networking using radio signals",
                 "A laptop connects in the garden without any cable", "mobile data", "wifi-is-internet"),
                ("bandwidth", "the maximum rate at which a connection can carry data",
                 "A video stalls when the whole family streams at once", "latency", "bandwidth-is-latency"),
                ("latency", "the delay before data starts to arrive",
                 "An online game reacts half a second after each key press", "bandwidth", "latency-is-bandwidth"),
                ("LAN", "a network covering a small area such as a home or school",
                 "Computers in one classroom share a printer", "WAN", "lan-is-wan"),
            ]),
            ("security", "Staying safe online", [
                ("firewall", "a filter that blocks unwanted network traffic",
                 "An unknown program is stopped from accepting outside connections", "antivirus", "firewall-is-antivirus"),
                ("malware", "software designed to harm a computer or its user",
                 "A download quietly encrypts every document and demands payment", "bug", "malware-is-bug"),
                ("phishing", "tricking people into revealing secrets with fake messages",
                 "An email that looks like it came from a bank asks for a password", "malware", "phishing-is-malware"),
                ("encryption", "scrambling data so only holders of a key can read it",
                 "A padlock icon appears next to a shop's address", "password", "encryption-is-password"),
                ("password", "a secret used to prove a user's identity",
                 "An account is locked after several wrong guesses", "encryption", "password-is-encryption"),
                ("backup", "a separate copy of data kept in case the original is lost",
                 "A stolen laptop's files are restored onto a new machine", "synchronisation", "sync-is-backup"),
            ]),
        ],
    },
]

PREREQS = {"hardware": [], "software": ["hardware"], "networks": ["hardware", "software"]}

# Section weights per style; the key section is strictly heaviest for every style.
WEIGHTS = [
    {"SS": 3.0, "GOA": 3.0, "EIA": 3.0, "CA": 3.0, "DLA": 3.0},
    {"SS": 2.0, "GOA": 1.0, "EIA": 1.5, "CA": 2.0, "DLA": 1.0},
    {"SS": 1.0, "GOA": 2.0, "EIA": 1.5, "CA": 1.0, "DLA": 2.0},
]

L3_PER_SECTION = 4
L2_PER_SECTION = 5


def article(term):
    return "an" if term[0].lower() in "aeiou" else "a"


def build_questions(cid, sid, facts, rng):
    terms = [f[0] for f in facts]
    questions = []

    def choices(correct_idx, labels, tag_for):
        others = [i for i in range(len(facts)) if i != correct_idx]
        confused = facts[correct_idx][3]
        pick = [i for i in others if facts[i][0] == confused]
        rest = [i for i in others if i not in pick]
        rng.shuffle(rest)
        chosen = (pick + rest)[:3]
        opts = [(correct_idx, True)] + [(i, False) for i in chosen]
        rng.shuffle(opts)
        out = []
        for k, (i, ok) in enumerate(opts):
            c = {"id": "abcd"[k], "body": labels(i), "correct": ok}
            if not ok:
                c["misconception"] = tag_for(i)
            out.append(c)
        return out

    for n, (term, definition, scenario, confused, tag) in enumerate(facts):
        def tag_for(i, tag=tag, confused=confused):
            return tag if facts[i][0] == confused else f"{sid}-guess"
        questions.append({
            "id": f"{cid}.{sid}.1{n}",
            "section": sid, "level": "L1",
            "dimension": "Objective",
            "points": 1,
            "body": f"What is {article(term)} {term}?",
            "choices": choices(n, lambda i: facts[i][1].capitalize() + ".", tag_for),
            "hints": [f"Think about what {article(term)} {term} does, not what it looks like.",
                      f"The answer mentions {definition.split()[1]} ..."],
        })
        if n < L2_PER_SECTION:
            questions.append({
                "id": f"{cid}.{sid}.2{n}",
                "section": sid, "level": "L2",
                "dimension": "Conceptual",
                "points": 2,
                "body": f"Which term matches this description: {definition}?",
                "choices": choices(n, lambda i: terms[i], tag_for),
                "hints": ["Rule out the options that describe a different job.",
                          f"It is easy to confuse this with {confused}."],
            })
        if n < L3_PER_SECTION:
            questions.append({
                "id": f"{cid}.{sid}.3{n}",
                "section": sid, "level": "L3",
                "dimension": "Conceptual" if n % 2 == 0 else "Objective",
                "points": 3,
                "body": f"{scenario}. Which idea best explains what is happening?",
                "choices": choices(n, lambda i: terms[i], tag_for),
                "hints": ["Ask what has to be true for this situation to happen.",
                          f"Compare the situation with the definition of {confused}."],
            })
    return questions


def variants(c):
    cid, title = c["id"], c["title"]
    sec_titles = [s[1] for s in c["sections"]]
    facts = [f for s in c["sections"] for f in s[2]]
    glossary = "; ".join(f"{f[0]}: {f[1]}" for f in facts[:6])
    prev = PREREQS[cid][-1] if PREREQS[cid] else None
    nxt = [k for k, v in PREREQS.items() if cid in v]
    link_in = [prev] if prev else []
    link_out = nxt[:1]
    ref = "https://en.wikipedia.org/wiki/" + title.split()[-1].capitalize()
    return {
        "SS": {"blocks": [
            {"kind": "text", "body": f"Quick challenge: before reading on, guess what happens inside a computer when you press a key. {title} is full of surprises.", "links": link_in},
            {"kind": "video-ref", "body": f"Short clip: a tour of {sec_titles[0].lower()} in under two minutes.", "links": [ref]},
            {"kind": "exercise", "body": f"Pick one of: {', '.join(sec_titles)}. Find one fact about it that surprised you.", "links": link_out},
        ]},
        "GOA": {"blocks": [
            {"kind": "text", "body": "By the end of this lesson you will be able to: " + "; ".join(f"name the parts of {t.lower()}" for t in sec_titles) + ".", "links": link_in},
            {"kind": "text", "body": "Checklist: " + glossary + ".", "links": []},
            {"kind": "exercise", "body": "Tick off each objective once you can explain it in one sentence.", "links": link_out},
        ]},
        "EIA": {"blocks": [
            {"kind": "text", "body": f"Why does {title.lower()} work the way it does? Each idea below comes with the reason behind it.", "links": link_in},
            {"kind": "text", "body": " ".join(f"{f[0].capitalize()} is {f[1]}, which explains why: {f[2].lower()}." for f in facts[:4]), "links": [ref]},
            {"kind": "exercise", "body": "For each idea, write one sentence explaining why it is needed.", "links": link_out},
        ]},
        "CA": {"blocks": [
            {"kind": "exercise", "body": f"Build it yourself: sketch a diagram connecting {', '.join(f[0] for f in facts[:5])}.", "links": link_in},
            {"kind": "image-ref", "body": f"Reference diagram of {sec_titles[0].lower()}.", "links": [ref]},
            {"kind": "text", "body": "Compare your diagram with the reference and invent one improvement.", "links": link_out},
        ]},
        "DLA": {"blocks": [
            {"kind": "text", "body": "Common mistakes and how to avoid them: " + "; ".join(f"{f[0]} is not {f[3]}" for f in facts[:6]) + ".", "links": link_in},
            {"kind": "text", "body": "Look back at your pre-test answers and find the ones that fell into these traps.", "links": [ref]},
            {"kind": "exercise", "body": "Rewrite one wrong answer so that it becomes correct.", "links": link_out},
        ]},
    }


def main():
    rng = random.Random(7)
    concepts = []
    for c in CONCEPTS:
        sections, questions = [], []
        for k, (sid, stitle, facts) in enumerate(c["sections"]):
            sections.append({"id": sid, "title": stitle, "weights": WEIGHTS[k]})
            questions += build_questions(c["id"], sid, facts, rng)
        concepts.append({
            "id": c["id"], "title": c["title"], "key_section": c["key"],
            "sections": sections, "variants": variants(c), "questions": questions,
        })
    pack = {
        "id": "demo-computing",
        "title": "Introduction to computers",
        "mastery_band": "Good",
        "prerequisites": PREREQS,
        "concepts": concepts,
    }
    out = pathlib.Path(__file__).resolve().parent.parent / "packs" / "demo-computing.json"
    out.write_text(json.dumps(pack, indent=2) + "\n")


if __name__ == "__main__":
    main()

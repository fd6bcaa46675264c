#!/usr/bin/env python3
"""Generate the synthetic classification corpus.

Each contract plants a fixed mix of public, private and MPT functions and is
padded with public bookkeeping lines up to a target size. Output is
deterministic; rerun after editing the templates and commit the result.
"""
import json
import pathlib

ROOT = pathlib.Path(__file__).resolve().parent.parent
CORPUS = ROOT / "corpus"

# name, public, private, mpt, target lines
CONTRACTS = [
    ("PowerGrid", 1, 1, 2, 25),
    ("Bidding", 0, 2, 2, 44),
    ("Scores", 0, 2, 4, 77),
    ("Insurance", 2, 3, 3, 89),
    ("ERC20Token", 4, 4, 3, 112),
    ("YunDou", 10, 0, 4, 279),
    ("Oracle", 19, 0, 3, 326),
    ("HTLC", 31, 0, 8, 1029),
]

STATE = [
    "    mapping(address !k => uint @k) bal;",
    "    mapping(address !h => uint @h) held;",
    "    uint @all total;",
    "    uint @all counter;",
    "    mapping(uint => uint) pubLog;",
]

PUBLIC = [
    ["function setTotal{i}(uint @all v) public {{", "    total = v + {i};", "}}"],
    ["function getTotal{i}() public returns (uint) {{", "    return total;", "}}"],
    [
        "function bump{i}(uint @all n) public {{",
        "    for (uint j = 0; j < n; j++) {{",
        "        counter++;",
        "    }}",
        "}}",
    ],
    ["function record{i}(uint @all key, uint @all v) public {{", "    pubLog[key] = v;", "}}"],
]

PRIVATE = [
    ["function deposit{i}(uint @me amount) public {{", "    bal[msg.sender] += amount;", "}}"],
    ["function balance{i}() public returns (uint @me) {{", "    return bal[msg.sender];", "}}"],
    [
        "function lock{i}(uint @me amount) public {{",
        "    require(bal[msg.sender] >= amount);",
        "    bal[msg.sender] -= amount;",
        "    held[msg.sender] += amount;",
        "}}",
    ],
    [
        "function release{i}(uint @me amount) public {{",
        "    require(held[msg.sender] >= amount);",
        "    held[msg.sender] -= amount;",
        "    bal[msg.sender] += amount;",
        "}}",
    ],
]

MPT = [
    [
        "function transfer{i}(address to, uint @me amount) public {{",
        "    require(bal[msg.sender] >= amount);",
        "    bal[msg.sender] -= amount;",
        "    bal[to] += reveal(amount, to);",
        "}}",
    ],
    [
        "function settle{i}(address[!p] ps, uint[@p] xs) public returns (uint sum) {{",
        "    uint @tee s = 0;",
        "    for (uint j = 0; j < ps.length; j++) {{",
        "        s += xs[j];",
        "    }}",
        "    sum = reveal(s, all);",
        "}}",
    ],
    [
        "function claim{i}(address from) public {{",
        "    uint @all amt = reveal(held[from], all);",
        "    held[from] -= amt;",
        "    bal[msg.sender] += amt;",
        "}}",
    ],
]


def functions(n_pub, n_priv, n_mpt):
    out = []
    for kind, templates, n in (("public", PUBLIC, n_pub), ("private", PRIVATE, n_priv), ("mpt", MPT, n_mpt)):
        for i in range(n):
            lines = [t.format(i=i) for t in templates[i % len(templates)]]
            out.append((kind, lines))
    return out


def render(name, n_pub, n_priv, n_mpt, target):
    fns = functions(n_pub, n_priv, n_mpt)
    base = 2 + len(STATE) + sum(len(f) + 1 for _, f in fns)
    pad = max(0, target - base)
    # Spread padding over every function, just before its closing brace.
    per, extra = divmod(pad, len(fns))
    body = []
    serial = 0
    for idx, (_, lines) in enumerate(fns):
        count = per + (1 if idx < extra else 0)
        padding = []
        for _ in range(count):
            padding.append(f"    counter = counter + {serial % 7 + 1};")
            serial += 1
        body.append("")
        body.extend("    " + l for l in lines[:-1] + padding + lines[-1:])
    text = [f"contract {name} {{"] + STATE + body + ["}"]
    return "\n".join(text) + "\n"


def main():
    manifest = [
        {"name": "SupplyChain", "file": "supplychain.cloak", "public": 0, "private": 5, "mpt": 1},
    ]
    for name, n_pub, n_priv, n_mpt, target in CONTRACTS:
        file = f"{name.lower()}.cloak"
        (CORPUS / file).write_text(render(name, n_pub, n_priv, n_mpt, target))
        manifest.append({"name": name, "file": file, "public": n_pub, "private": n_priv, "mpt": n_mpt})
    for m in manifest:
        m["loc"] = len((CORPUS / m["file"]).read_text().splitlines())
    (CORPUS / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")


if __name__ == "__main__":
    main()

"""Build the frozen conformance corpus.

Runs every hand-written case plus a seeded batch of generated programs under
the host python3 and records the canonical rendering of each result (sets are
rendered with members sorted by their own rendering, so set order never
matters). Usage: python3 gen.py > corpus.json
"""

import contextlib
import io
import json
import random
import sys

from cases import CASES

SEED = 20240611
GENERATED = 260


def canon(v, seen=()):
    if id(v) in seen:
        return {list: "[...]", dict: "{...}"}.get(type(v), "...")
    if isinstance(v, (list, tuple, set, dict)):
        seen = seen + (id(v),)
    c = lambda x: canon(x, seen)
    if isinstance(v, bool) or v is None or isinstance(v, (int, float, str)):
        return repr(v)
    if isinstance(v, list):
        return "[" + ", ".join(c(x) for x in v) + "]"
    if isinstance(v, tuple):
        if len(v) == 1:
            return "(" + c(v[0]) + ",)"
        return "(" + ", ".join(c(x) for x in v) + ")"
    if isinstance(v, set):
        if not v:
            return "set()"
        return "{" + ", ".join(sorted(c(x) for x in v)) + "}"
    if isinstance(v, dict):
        return "{" + ", ".join(c(k) + ": " + c(val) for k, val in v.items()) + "}"
    return repr(v)


def oracle(source, call):
    ns = {}
    out = io.StringIO()
    try:
        with contextlib.redirect_stdout(out):
            exec(compile(source, "<prog>", "exec"), ns)
            v = eval(call, ns)
        return {"ok": canon(v), "stdout": out.getvalue()}
    except Exception as e:  # noqa: BLE001
        return {"error": type(e).__name__, "message": str(e)}


# ---------------------------------------------------------------- generator

WORDS = ["ab", "ba", "hello", "a b", "x1", "Zz", "", "aaa", "Hi There", "42", "-7", "q,r"]


class Gen:
    def __init__(self, rng):
        self.r = rng
        self.env = {}
        self.n = 0

    def pick(self, ty):
        names = [k for k, t in self.env.items() if t == ty]
        return self.r.choice(names) if names else None

    def small(self):
        return str(self.r.randint(-3, 6))

    def word(self):
        return repr(self.r.choice(WORDS))

    def expr(self, ty, depth=0):
        r = self.r
        i = lambda: self.pick("int") or self.small()
        s = lambda: self.pick("str") or self.word()
        l = lambda: self.pick("list") or "[1, 2, 3]"
        ls = lambda: self.pick("strs") or "['b', 'a']"
        d = lambda: self.pick("dict") or "{'a': 1}"
        st = lambda: self.pick("set") or "{1, 2}"
        fl = lambda: self.pick("float") or "1.5"
        opts = {
            "int": [
                lambda: f"len({l()})", lambda: f"{i()} + {i()}", lambda: f"{i()} * {i()}",
                lambda: f"{i()} - {i()}", lambda: f"{i()} // {i()}", lambda: f"{i()} % {i()}",
                lambda: f"abs({i()})", lambda: f"{s()}.count({self.word()})", lambda: f"{s()}.find({self.word()})",
                lambda: f"{l()}.index({i()})", lambda: f"sum({l()})", lambda: f"max({l()})", lambda: f"min({l()})",
                lambda: f"{l()}.count({i()})", lambda: f"{d()}.get({self.word()}, {i()})", lambda: f"int({s()})",
                lambda: f"round({fl()})", lambda: f"ord({s()}[0])", lambda: f"{i()} ** 2", lambda: f"len({st()})",
                lambda: f"divmod({i()}, {i()})[0]", lambda: f"sorted({l()})[0]", lambda: f"len({s()}.split())",
                lambda: f"sum(x * x for x in {l()})", lambda: f"{s()}.rfind({self.word()})",
                lambda: f"{l()}[{i()}]", lambda: f"len({d()})", lambda: f"max({i()}, {i()}, key=abs)",
                lambda: f"pow({i()}, 3, 5)", lambda: f"{i()} & {i()} | {i()}",
            ],
            "str": [
                lambda: f"{s()}.upper()", lambda: f"{s()}.lower()", lambda: f"{s()}.strip()",
                lambda: f"{s()}.replace({self.word()}, {self.word()})", lambda: f"{s()} + {s()}",
                lambda: f"{s()} * {r.randint(0, 3)}", lambda: f"{s()}[{i()}:{i()}]", lambda: f"'-'.join({ls()})",
                lambda: f"str({i()})", lambda: f"{s()}.title()", lambda: f"{s()}.zfill({i()})",
                lambda: f"{s()}.center({i()} + 4, '*')", lambda: f"chr(65 + {i()} % 26)", lambda: f"{s()}.capitalize()",
                lambda: f"{s()}.swapcase()", lambda: f"{s()}.lstrip('a')", lambda: f"{s()}.rstrip('ab ')",
                lambda: f"{s()}.removeprefix({self.word()})", lambda: f"{s()}.removesuffix({self.word()})",
                lambda: f"{s()}.ljust({i()}, '.')", lambda: f"{s()}.rjust({i()})", lambda: f"{s()}[::-1]",
                lambda: f"{s()}[{i()}]", lambda: f"str({fl()})", lambda: f"str({l()})", lambda: f"'%s-%d' % ({s()}, {i()})",
                lambda: f"''.join(sorted({s()}))", lambda: f"' '.join(w.capitalize() for w in {s()}.split())",
            ],
            "list": [
                lambda: f"sorted({l()})", lambda: f"{l()} + {l()}", lambda: f"{l()}[::2]",
                lambda: f"[x * {i()} for x in {l()}]", lambda: f"list(range({i()}))",
                lambda: f"list(reversed({l()}))", lambda: f"[x for x in {l()} if x % 2]",
                lambda: f"list(map(abs, {l()}))", lambda: f"sorted({st()})", lambda: f"{l()}[{i()}:]",
                lambda: f"sorted({l()}, reverse=True)", lambda: f"[len(w) for w in {ls()}]",
                lambda: f"list({d()}.values())", lambda: f"[a + b for a, b in zip({l()}, {l()})]",
                lambda: f"list(filter(lambda x: x > {i()}, {l()}))", lambda: f"{l()} * 2",
                lambda: f"[i for i, x in enumerate({l()}) if x > 0]", lambda: f"list(range({i()}, 10, 3))",
            ],
            "strs": [
                lambda: f"{s()}.split()", lambda: f"{s()}.split('a')", lambda: f"sorted({ls()})",
                lambda: f"{ls()} + [{s()}]", lambda: f"list({s()})", lambda: f"{s()}.splitlines()",
                lambda: f"list({d()})", lambda: f"[w.upper() for w in {ls()}]", lambda: f"{s()}.rsplit(None, 1)",
                lambda: f"sorted({ls()}, key=len)", lambda: f"list(map(str, {l()}))",
            ],
            "dict": [
                lambda: f"{{{s()}: {i()}}}", lambda: f"dict(zip({ls()}, {l()}))", lambda: f"{d()}.copy()",
                lambda: f"{{k: v for k, v in {d()}.items() if v > {i()}}}", lambda: f"{{w: len(w) for w in {ls()}}}",
                lambda: f"dict({d()}, z={i()})",
            ],
            "set": [
                lambda: f"set({l()})", lambda: f"{st()} | {st()}", lambda: f"{st()} & {st()}",
                lambda: f"{st()} - {st()}", lambda: f"{st()}.union({l()})", lambda: f"{st()}.intersection({l()})",
                lambda: f"{{x % 5 for x in {l()}}}", lambda: f"{st()}.symmetric_difference({st()})",
                lambda: f"{st()}.difference({l()})", lambda: f"set({s()})",
            ],
            "bool": [
                lambda: f"{st()}.issubset({st()})", lambda: f"{s()}.startswith({self.word()})", lambda: f"{s()}.isalpha()",
                lambda: f"{i()} in {l()}", lambda: f"{s()} in {s()}", lambda: f"any({l()})", lambda: f"all({l()})",
                lambda: f"{i()} < {i()}", lambda: f"{l()} == {l()}", lambda: f"{s()}.isdigit()",
                lambda: f"{st()}.isdisjoint({st()})", lambda: f"{s()}.endswith({self.word()})", lambda: f"{s()}.isalnum()",
                lambda: f"{st()}.issuperset({st()})", lambda: f"{s()}.islower()", lambda: f"{s()}.isupper()",
                lambda: f"{s()}.isspace()", lambda: f"{l()} < {l()}", lambda: f"isinstance({i()}, int)",
                lambda: f"not {i()}", lambda: f"bool({s()})",
            ],
            "float": [
                lambda: f"{i()} / {i()}", lambda: f"{fl()} * {i()}", lambda: f"float({i()})", lambda: f"round({fl()}, 2)",
                lambda: f"{fl()} + 0.1", lambda: f"{fl()} ** 2", lambda: f"abs({fl()})", lambda: f"{fl()} - {fl()} / 3",
                lambda: f"sum([0.1, {fl()}, 0.2])", lambda: f"{fl()} // 0.3", lambda: f"{fl()} % 0.7",
                lambda: f"float({s()})", lambda: f"max({fl()}, {i()})",
            ],
            "tuple": [
                lambda: f"tuple({l()})", lambda: f"({i()}, {s()})", lambda: f"divmod({i()}, {i()})",
                lambda: f"{s()}.partition({self.word() or repr('a')})", lambda: f"tuple(sorted({st()}))",
                lambda: f"({i()},)", lambda: f"min(({i()}, 'a'), ({i()}, 'b'))",
            ],
        }
        return r.choice(opts[ty])()

    def fresh(self, ty):
        self.n += 1
        name = f"v{self.n}"
        return name

    def stmt(self, indent):
        r = self.r
        pad = " " * indent
        k = r.random()
        if k < 0.55:
            ty = r.choice(["int", "str", "list", "strs", "dict", "set", "bool", "float", "tuple"])
            e = self.expr(ty)
            name = self.fresh(ty)
            self.env[name] = ty
            return [f"{pad}{name} = {e}"]
        if k < 0.75:
            muts = []
            l, ls, d, st, i, s = (self.pick(t) for t in ["list", "strs", "dict", "set", "int", "str"])
            iv = i or self.small()
            sv = s or self.word()
            if l:
                muts += [f"{l}.append({iv})", f"{l}.extend([{iv}, 0])", f"{l}.insert({iv}, 9)",
                         f"{l}.sort()", f"{l}.reverse()", f"{l}.remove({iv})", f"{l}.pop()",
                         f"{l}[0] = {iv}", f"{l} += [{iv}]", f"del {l}[0]", f"{l}.clear()",
                         f"{l}.sort(key=lambda x: -x)", f"{l}[1:2] = [7, 8]"]
            if ls:
                muts += [f"{ls}.append({sv})", f"{ls}.sort(reverse=True)", f"{ls}.pop(0)"]
            if d:
                muts += [f"{d}[{sv}] = {iv}", f"{d}.update({{'k': {iv}}})", f"{d}.pop({sv}, 0)",
                         f"{d}.setdefault({sv}, {iv})", f"{d}.popitem()", f"del {d}[{sv}]"]
            if st:
                muts += [f"{st}.add({iv})", f"{st}.discard({iv})", f"{st}.remove({iv})",
                         f"{st}.update([{iv}, 5])", f"{st} |= {{{iv}}}", f"{st}.clear()"]
            if i:
                muts += [f"{i} += {self.small()}", f"{i} *= 2", f"{i} -= {self.small()}"]
            if s:
                muts += [f"{s} += {self.word()}"]
            if not muts:
                return [f"{pad}pass"]
            return [pad + r.choice(muts)]
        if k < 0.85:
            src = self.pick("list") or self.pick("strs") or self.pick("str")
            if not src:
                return [f"{pad}pass"]
            acc = self.fresh("int")
            self.env[acc] = "int"
            body = r.choice([f"{acc} += 1", f"{acc} = {acc} + len(str(e))", f"{acc} += e if isinstance(e, int) else 0"])
            lines = [f"{pad}{acc} = 0", f"{pad}for e in {src}:"]
            if r.random() < 0.5:
                lines += [f"{pad}    if e == {self.small()}:", f"{pad}        break"]
            return lines + [f"{pad}    {body}"]
        if k < 0.93:
            cond = self.expr("bool")
            ty = r.choice(["int", "str", "list"])
            name = self.fresh(ty)
            a, b = self.expr(ty), self.expr(ty)
            self.env[name] = ty
            return [f"{pad}if {cond}:", f"{pad}    {name} = {a}", f"{pad}else:", f"{pad}    {name} = {b}"]
        if k < 0.97:
            i = self.pick("int") or self.small()
            return [f"{pad}print({i}, {self.pick('str') or self.word()})"]
        i = self.fresh("int")
        self.env[i] = "int"
        return [f"{pad}{i} = 0", f"{pad}while {i} < {self.r.randint(0, 6)}:", f"{pad}    {i} += 1"]


def make_program(rng):
    g = Gen(rng)
    params = {"a": "int", "s": "str", "xs": "list", "ws": "strs", "d": "dict", "st": "set", "x": "float"}
    g.env = dict(params)
    lines = ["def f(a, s, xs, ws, d, st, x):"]
    for _ in range(rng.randint(2, 8)):
        lines += g.stmt(4)
    names = list(g.env)
    rets = rng.sample(names, min(len(names), rng.randint(1, 4)))
    lines.append("    return " + ", ".join(rets) + ("," if len(rets) == 1 else ""))
    src = "\n".join(lines) + "\n"
    args = [
        str(rng.randint(-5, 9)),
        repr(rng.choice(WORDS)),
        repr([rng.randint(-4, 9) for _ in range(rng.randint(0, 5))]),
        repr([rng.choice(WORDS) for _ in range(rng.randint(0, 4))]),
        repr({w: rng.randint(0, 9) for w in rng.sample(WORDS, rng.randint(0, 3))}),
        "{" + ", ".join(str(rng.randint(0, 7)) for _ in range(rng.randint(1, 4))) + "}",
        repr(rng.choice([0.5, 2.25, -1.75, 3.0, 0.1, 1e-3, 123.456])),
    ]
    return src, "f(" + ", ".join(args) + ")"


def main():
    records = []
    for src, calls in CASES:
        for call in calls:
            records.append({"source": src, "call": call, "origin": "hand"})
    rng = random.Random(SEED)
    seen = set()
    while sum(1 for r in records if r["origin"] == "generated") < GENERATED:
        src, call = make_program(rng)
        if src in seen:
            continue
        seen.add(src)
        records.append({"source": src, "call": call, "origin": "generated"})
    for i, rec in enumerate(records):
        rec["id"] = i
        rec["expect"] = oracle(rec["source"], rec["call"])
    json.dump(records, sys.stdout, indent=1, ensure_ascii=False)
    sys.stdout.write("\n")


if __name__ == "__main__":
    main()

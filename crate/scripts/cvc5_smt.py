#!/usr/bin/env python3
# SPDX-License-Identifier: Apache-2.0
"""Line-oriented SMT-LIB2 front-end over the cvc5 Python bindings.

Reads commands from stdin and answers them as an incremental solver binary
would, so it can stand in for a solver executable.
"""
import sys

import cvc5
from cvc5 import InputParser, SymbolManager


def fresh():
    tm = cvc5.TermManager()
    solver = cvc5.Solver(tm)
    solver.setOption("produce-models", "true")
    solver.setOption("incremental", "true")
    return tm, solver, SymbolManager(tm)


def complete(text):
    depth, in_bar, in_str = 0, False, False
    for ch in text:
        if in_bar:
            in_bar = ch != "|"
        elif in_str:
            in_str = ch != '"'
        elif ch == "|":
            in_bar = True
        elif ch == '"':
            in_str = True
        elif ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
    return depth == 0 and text.strip() != ""


def main():
    tm, solver, sm = fresh()
    buf = ""
    for line in sys.stdin:
        buf += line
        if not complete(buf):
            continue
        cmd_text, buf = buf, ""
        if cmd_text.strip() == "(reset)":
            tm, solver, sm = fresh()
            continue
        parser = InputParser(solver, sm)
        parser.setStringInput(cvc5.InputLanguage.SMT_LIB_2_6, cmd_text, "stdin")
        try:
            while True:
                cmd = parser.nextCommand()
                if cmd.isNull():
                    break
                out = cmd.invoke(solver, sm)
                if out:
                    sys.stdout.write(out if out.endswith("\n") else out + "\n")
        except Exception as e:  # noqa: BLE001
            msg = str(e).replace('"', "'").replace("\n", " ")
            sys.stdout.write('(error "%s")\n' % msg)
        sys.stdout.flush()


if __name__ == "__main__":
    main()

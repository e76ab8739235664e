#!/usr/bin/env python3
"""Regenerate the bundled incident fixtures and the canned mock-LLM responses.

The four incident receipts are reconstructions of well-known exploits
(XSURGE reentrancy, Beauty Chain overflow, MEVBOT flash loan, GovernMental
DoS). Where only a four-hex-digit abbreviation of an address is known, the
full address repeats those digits ten times (``0x0ed7`` becomes
``0x0ed70ed7...0ed7``). Values are exact integers at five significant digits.

Run after any change to prompt rendering, since mock responses are keyed by
the SHA-256 of the prompt:

    python scripts/build_fixtures.py
"""

from pathlib import Path

from txlogscan.abi import builtin_registry, encode_log, signature_hash
from txlogscan.events import build_trace
from txlogscan.ingestion import CallRecord, TransactionReceipt, receipt_to_fixture
from txlogscan.llm import build_prompt

ROOT = Path(__file__).resolve().parents[1] / "src" / "txlogscan" / "data"
REGISTRY = builtin_registry()

ZERO = "0x" + "00" * 20
BALANCER_VAULT = "0xba12222222228d8ba445958a75a0704d566bf2c8"
WETH = "0xc02aaa39b223fe8d0a0e5c4f27ead9083c756cc2"
WBNB = "0xbb4cdb9cbd36b01bd1cbaebf2de08d9173bc095c"


def addr(abbrev):
    digits = abbrev.lower().removeprefix("0x")
    assert len(digits) == 4
    return "0x" + digits * 10


def synthetic_hash(label):
    return "0x" + signature_hash(f"txlogscan-fixture:{label}").hex()


def sig(mantissa, exponent):
    """``sig(18966, 11)`` is 1.8966e15 as an exact integer."""
    return mantissa * 10**exponent


def logs(rows):
    out = []
    for i, (name, emitter, params) in enumerate(rows):
        out.append(encode_log(name, params, REGISTRY, address=emitter, log_index=i))
    return tuple(out)


def transfer(emitter, src, dst, value):
    return ("Transfer", emitter, {"from": src, "to": dst, "value": value})


def xsurge():
    a, v, t = addr("0eD7"), addr("E1E1"), addr("5f2e")
    rows = [
        transfer(WBNB, a, t, sig(10000, 18)),
        transfer(WBNB, v, t, sig(18966, 11)),
        transfer(WBNB, v, t, sig(11235, 12)),
        transfer(WBNB, t, v, sig(18966, 11)),
        transfer(WBNB, v, t, sig(12964, 14)),
        transfer(WBNB, t, v, sig(11235, 12)),
        transfer(WBNB, v, t, sig(18641, 14)),
        transfer(WBNB, t, v, sig(12964, 14)),
        transfer(WBNB, t, v, sig(18641, 14)),
        transfer(WBNB, t, a, sig(10030, 18)),
    ]
    return TransactionReceipt(synthetic_hash("xsurge"), 0, True, 0, logs(rows))


def beautychain():
    bec = addr("c5d1")
    rows = [
        transfer(bec, addr("09a3"), addr("b4D3"), 2**255),
        transfer(bec, addr("09a3"), addr("0e82"), 2**255),
    ]
    return TransactionReceipt(
        "0xad89ff16fd1ebe3a0a7cf4ed282302c06626c1af33221ebe0d3a470aba4a660f", 0, True, 0, logs(rows)
    )


def mevbot():
    bot, pair, usdc = addr("4b77"), addr("9d2e"), addr("a0b8")

    def swap(sender, to, a0in, a1in, a0out, a1out):
        return (
            "Swap",
            pair,
            {"sender": sender, "to": to, "amount0In": a0in, "amount1In": a1in, "amount0Out": a0out, "amount1Out": a1out},
        )

    rows = [
        transfer(WETH, addr("2D00"), addr("88e6"), sig(18774, 16)),
        transfer(usdc, ZERO, BALANCER_VAULT, 1),
        ("FlashLoan", BALANCER_VAULT, {"recipient": ZERO, "token": WETH, "amount": 1, "feeAmount": 0}),
        transfer(WETH, addr("8ad5"), bot, sig(15825, 16)),
        transfer(WETH, addr("B4e1"), bot, sig(16941, 15)),
        ("Approval", usdc, {"owner": bot, "spender": BALANCER_VAULT, "value": 2**256 - 1}),
        swap(ZERO, ZERO, 0, 0, 0, 0),
        transfer(usdc, bot, BALANCER_VAULT, sig(14707, 6)),
        transfer(WETH, BALANCER_VAULT, bot, sig(11379, 15)),
        transfer(usdc, bot, addr("B4e1"), sig(21896, 6)),
        transfer(usdc, bot, addr("8ad5"), sig(20454, 7)),
        ("Sync", pair, {"reserve0": sig(46287, 9), "reserve1": sig(35902, 18)}),
        swap(bot, bot, sig(21896, 6), 0, 0, sig(16941, 15)),
        swap(bot, bot, sig(20454, 7), 0, 0, 0),
        ("Withdrawal", WETH, {"src": bot, "wad": sig(18657, 16)}),
    ]
    return TransactionReceipt(
        "0x35ecf595864400696853c53edf3e3d60096639b6071cadea6076c9c6ceb921c1", 0, True, 0, logs(rows)
    )


def governmental():
    gm = addr("f457")
    finney = 10**15
    calls = [
        CallRecord("lendGM", addr("94bd"), gm, 10 * finney, 36855),
        CallRecord("totalPayedOut()", addr("490f"), gm, 0, 21651),
        CallRecord("lendGM", addr("818d"), gm, finney, 2532963),
        *[CallRecord("lendGM", addr("818d"), gm, finney, 5057945) for _ in range(4)],
        CallRecord("Unknown Function", addr("490f"), gm, 1000 * finney, 750000),
        CallRecord("Unknown Function", addr("490f"), gm, 8236 * 10**14, 750000),
        CallRecord("Unknown Function", addr("490f"), gm, 10 * finney, 750000),
    ]
    return TransactionReceipt(synthetic_hash("governmental"), 0, False, 4712388, (), tuple(calls))


def empty():
    return TransactionReceipt(synthetic_hash("empty"), 0, True, 21000, ())


INCIDENTS = {
    "xsurge": xsurge,
    "beautychain": beautychain,
    "mevbot": mevbot,
    "governmental": governmental,
    "empty": empty,
}

MOCK_RESPONSES = {
    "xsurge": """\
Event 0: Transfer | 0x0ed7... sends 1.0000e+22 to 0x5f2e..., funding the attacker contract.
Event 1: Transfer | 0xe1e1... sends 1.8966e+15 to 0x5f2e... as the contract pays out a sale.
Event 2: Transfer | 0xe1e1... sends 1.1235e+16 to 0x5f2e... before the first payout is settled.
Event 3: Transfer | 0x5f2e... returns 1.8966e+15 to 0xe1e1..., buying back in.
Event 4: Transfer | 0xe1e1... sends a larger 1.2964e+18 to 0x5f2e....
Event 5: Transfer | 0x5f2e... sends 1.1235e+16 back to 0xe1e1....
Event 6: Transfer | 0xe1e1... sends 1.8641e+18 to 0x5f2e....
Event 7: Transfer | 0x5f2e... sends 1.2964e+18 back to 0xe1e1....
Event 8: Transfer | 0x5f2e... sends 1.8641e+18 back to 0xe1e1....
Event 9: Transfer | 0x5f2e... repays 1.0030e+22 to 0x0ed7..., slightly more than it received.

## Summary
Funds bounce back and forth between 0x5f2e... and 0xe1e1... with growing amounts, and the
attacker ends the transaction holding more than it started with.

## Pattern Analysis
The alternating transfers between the same two addresses form a loop: the victim pays out before its
balance bookkeeping is updated and the attacker immediately calls back in. This matches Reentrancy.

## Further Recommendation
Audit the sell and purchase paths of 0xe1e1... for external calls made before state updates and add a
reentrancy guard.
""",
    "beautychain": """\
Event 0: Transfer | 0x09a3... sends 5.7896e+76 (2^255) tokens to 0xb4d3....
Event 1: Transfer | 0x09a3... sends the same 5.7896e+76 tokens to 0x0e82....

**Summary:** Two transfers from one sender each move 2^255 tokens, far beyond any realistic supply.

**Pattern Analysis:** A value this large points to an integer overflow: the total of the batch wrapped past
the uint256 range, so the balance check passed while each recipient was credited 2^255 tokens.

**Further Recommendation:** Check the batch transfer arithmetic with overflow-safe multiplication and pause
trading of the token until balances are reconciled.
""",
    "mevbot": """\
Event 0: Transfer | 1.8774e+20 moves from 0x2d00... to 0x88e6....
Event 1: Transfer | tokens are minted to the Balancer vault.
Event 2: FlashLoan | the vault lends WETH with no collateral.
Event 3: Transfer | 0x8ad5... sends 1.5825e+20 to the bot 0x4b77....
Event 4: Transfer | 0xb4e1... sends 1.6941e+19 to the bot.
Event 5: Approval | the bot approves the vault for the maximum uint256 amount.
Event 6: Swap | an empty swap with zero amounts.
Event 7: Transfer | the bot pays 1.4707e+10 to the vault.
Event 8: Transfer | the vault returns 1.1379e+19 to the bot.
Event 9: Transfer | the bot sends 2.1896e+10 to 0xb4e1....
Event 10: Transfer | the bot sends 2.0454e+11 to 0x8ad5....
Event 11: Sync | pool reserves update to 4.6287e+13 and 3.5902e+22.
Event 12: Swap | the bot swaps 2.1896e+10 in for 1.6941e+19 out.
Event 13: Swap | the bot swaps 2.0454e+11 in for nothing out.
Event 14: Withdrawal | the bot withdraws 1.8657e+20 WETH.

1. Summary
A flash loan funds a series of swaps through pools the bot controls, then the proceeds are withdrawn.

2. Pattern Analysis
The FlashLoan event followed by Swap events at skewed prices and a closing Withdrawal is a flash loan attack.
The unlimited Approval to the vault let the attacker move the bot's balance during the swaps.

3. Further Recommendation
Restrict who can trigger the bot's swap callback and stop granting unlimited approvals to external vaults.
""",
    "governmental": """\
Event 0: lendGM | 0x94bd... lends 0.01 ETH using 36855 gas.
Event 1: totalPayedOut() | a read-only query.
Event 2: lendGM | 0x818d... lends 0.001 ETH; gas jumps to 2532963.
Event 3: lendGM | 0x818d... lends 0.001 ETH again using 5057945 gas.
Event 4: lendGM | another 0.001 ETH loan at 5057945 gas.
Event 5: lendGM | another 0.001 ETH loan at 5057945 gas.
Event 6: lendGM | another 0.001 ETH loan at 5057945 gas.
Event 7: Unknown Function | 1.0 ETH sent with 750000 gas.
Event 8: Unknown Function | 0.8236 ETH sent with 750000 gas.
Event 9: Unknown Function | 0.01 ETH sent with 750000 gas.

Summary
One address repeatedly lends tiny amounts, and the gas each call needs keeps climbing until it passes the
block gas limit.

Pattern Analysis
The repeated cheap lendGM calls grow the creditor list so that clearing it needs more gas than any
transaction may use. This is a DoS (denial of service) attack that leaves the payout permanently stuck.

Further Recommendation
Cap the creditor list or let creditors withdraw individually instead of clearing the whole list in one call.
""",
}


def main():
    (ROOT / "incidents").mkdir(parents=True, exist_ok=True)
    llm_dir = ROOT / "llm"
    llm_dir.mkdir(parents=True, exist_ok=True)
    for stale in llm_dir.glob("*.txt"):
        stale.unlink()
    for name, make in INCIDENTS.items():
        receipt = make()
        (ROOT / "incidents" / f"{name}.json").write_bytes(receipt_to_fixture(receipt))
        if name in MOCK_RESPONSES:
            bundle = build_prompt(build_trace(receipt, REGISTRY))
            (llm_dir / f"{bundle.digest}.txt").write_text(MOCK_RESPONSES[name], encoding="utf-8")
            print(f"{name}: {len(receipt.logs)} logs, prompt {bundle.digest[:12]}")


if __name__ == "__main__":
    main()

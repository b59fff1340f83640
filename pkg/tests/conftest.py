import pytest

# Shift-register fixture: the three canonical always blocks and their header.
STATE_REGISTER_BLOCK = """always @(posedge clk) begin
\tif(enable) begin
\t\tQ <= nextState;
\tend
end"""

NEXT_STATE_BLOCK = """always @(Q, S) begin
\tnextState = {Q[6:0], S};
end"""

OUTPUT_LOGIC_BLOCK = """always @(Q, A, B, C) begin
\tcase({A, B, C})
\t\t3'b000: Z = Q[0];
\t\t3'b001: Z = Q[1];
\t\t3'b010: Z = Q[2];
\t\t3'b011: Z = Q[3];
\t\t3'b100: Z = Q[4];
\t\t3'b101: Z = Q[5];
\t\t3'b110: Z = Q[6];
\t\t3'b111: Z = Q[7];
\tendcase
end"""

SHIFT_REGISTER_HEADER = """module top_module (
\tinput clk,
\tinput enable,
\tinput S,
\tinput A,
\tinput B,
\tinput C,
\toutput reg Z
);"""

# Byte-receiver FSM: 12-row transition table with wildcard inputs.
BYTE_FSM_STT = """Sure, we can define a state machine with four states: IDLE, BYTE1, BYTE2, and BYTE3. Here's the state transition table:
| Current State | in[3] | reset | Next State | done |
|---------------|-------|-------|------------|------|
| IDLE          | 0     | 0     | IDLE       | 0    |
| IDLE          | 0     | 1     | IDLE       | 0    |
| IDLE          | 1     | 0     | BYTE1      | 0    |
| IDLE          | 1     | 1     | IDLE       | 0    |
| BYTE1         | X     | 0     | BYTE2      | 0    |
| BYTE1         | X     | 1     | IDLE       | 0    |
| BYTE2         | X     | 0     | BYTE3      | 0    |
| BYTE2         | X     | 1     | IDLE       | 0    |
| BYTE3         | 0     | 0     | IDLE       | 1    |
| BYTE3         | 0     | 1     | IDLE       | 0    |
| BYTE3         | 1     | 0     | BYTE1      | 1    |
| BYTE3         | 1     | 1     | IDLE       | 0    |

In this table, 'X' denotes a don't care condition."""

# Two-input exemplar table in the truth-table prompt's JSON schema.
OR_TABLE_JSON = {
    "table": [[0, 0, 0], [0, 1, 1], [1, 0, 1], [1, 1, 1]],
    "inputs": ["a[1]", "a[2]"],
    "outputs": ["x"],
    "header_inputs": ["a[2]", "a[1]"],
    "header_outputs": ["x"],
}

# Four-input single-output table (a Karnaugh-map style function).
KMAP_TABLE_JSON = {
    "table": [
        [0, 0, 0, 0, 1], [0, 0, 0, 1, 1], [0, 0, 1, 1, 0], [0, 0, 1, 0, 1],
        [0, 1, 0, 0, 1], [0, 1, 0, 1, 0], [0, 1, 1, 1, 0], [0, 1, 1, 0, 1],
        [1, 1, 0, 0, 0], [1, 1, 0, 1, 1], [1, 1, 1, 1, 1], [1, 1, 1, 0, 1],
        [1, 0, 0, 0, 1], [1, 0, 0, 1, 1], [1, 0, 1, 1, 0], [1, 0, 1, 0, 1],
    ],
    "inputs": ["a", "b", "c", "d"],
    "outputs": ["out"],
    "header_inputs": ["a", "b", "c", "d"],
    "header_outputs": ["out"],
}


@pytest.fixture
def shift_register_blocks():
    return [STATE_REGISTER_BLOCK, NEXT_STATE_BLOCK, OUTPUT_LOGIC_BLOCK]


@pytest.fixture
def shift_register_header():
    return SHIFT_REGISTER_HEADER

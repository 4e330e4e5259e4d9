"""Desk-scale value-decomposition lab for cooperative multi-agent RL.

Agents learn individual Q-functions under centralized training with
decentralized execution; the mixing stage that combines them into a team
value is pluggable: an unweighted sum (VDN), a learned monotonic
hypernetwork, or a zero-parameter synthesized program in a small verifiable
expression language.
"""

__version__ = "0.1.0"

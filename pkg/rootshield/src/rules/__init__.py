from .RuleSet import RuleSet, Rule, RuleBlock, SourceSet, AllowSetBlock, TtlMismatchBlock, SourceBlock, \
    QnameBlock, block_of
from .Renderers import render, render_neutral, render_ipset, render_iptables, parse_neutral, qname_wire_hex, \
    set_name_of, RENDERERS, CHAIN

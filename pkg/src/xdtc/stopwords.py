"""Bundled English stopword list.

Frozen so that corpus construction is byte-reproducible across runs and
machines.  Contraction stems ("don", "isn", "ll", ...) are included because
the tokenizer splits on apostrophes.
"""

ENGLISH_STOPWORDS = frozenset("""
about above after again against all also am an and any are aren as at be
because been before being below between both but by can cannot could couldn
did didn do does doesn doing don down during each few for from further had
hadn has hasn have haven having he her here hers herself him himself his how
if in into is isn it its itself just let ll me might more most mustn must my
myself no nor not now of off on once only onto or other ought our ours
ourselves out over own re same shall shan she should shouldn since so some
such than that the their theirs them themselves then there these they this
those through to too under until up upon us ve very was wasn we were weren
what when where whether which while who whom why will with within without won
would wouldn yes yet you your yours yourself yourselves
""".split())

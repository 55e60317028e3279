"""scamscout: find scam websites through the search queries that surface them.

The pipeline scores candidate search queries by how many scam domains they
return (toxicity/expansion), learns to predict those scores from the query
text alone by distilling a teacher that also saw the result pages, and then
replays or runs discovery with the top-ranked queries.
"""

__version__ = "0.1.0"

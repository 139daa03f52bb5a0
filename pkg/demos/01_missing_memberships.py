"""Missing class memberships: what a closed-world oracle can and cannot see.

Joe is known to Ani but has no asserted type, so the symbolic oracle leaves
Ani out of ``knows some Person``. A link predictor trained on the same five
assertions could in principle fill the gap, but with only five facts every
unseen (x, rdf:type, Person) triple is drawn as a negative hundreds of times,
so the model learns Joe is not a Person and agrees with the oracle.
"""

from ebr import NeuralDomain, TrainConfig, extract_triples, materialize, oracle_retrieve, parse_concept, retrieve, train
from ebr.fixtures import load_fixture
from ebr.neural import EmbeddingPredictor

kb = load_fixture("incomplete-knows")
query = parse_concept("knows some Person")

mkb = materialize(kb)
print("oracle  Person           :", sorted(oracle_retrieve(parse_concept("Person"), mkb)))
print("oracle  knows some Person:", sorted(oracle_retrieve(query, mkb)))

model = train(extract_triples(kb), TrainConfig(dim=16, epochs=200))
p = EmbeddingPredictor(model)
print("P(Joe rdf:type Person) = %.3f" % p.predict("Joe", "rdf:type", "Person"))
for gamma in (0.3, 0.5):
    dom = NeuralDomain.from_kb(kb, gamma)
    print(f"neural  knows some Person (gamma={gamma}):", sorted(retrieve(query, p, dom)))

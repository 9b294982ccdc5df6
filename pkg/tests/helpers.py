from motesim.kernel import Simulator
from motesim.mote import Mote, MoteSpec, Network
from motesim.radio import EnvironmentProfile, Position, RadioSpec

RADIO = RadioSpec()
QUIET = EnvironmentProfile("quiet", 2.0, 55.0, 0.0)


def network(env=QUIET, seed=0, nodes=(), **mote_kw):
    """Small network; ``nodes`` is a list of (id, (x, y)[, role])."""
    net = Network(Simulator(seed), RADIO, env)
    for spec in nodes:
        nid, (x, y), *rest = spec
        net.add(Mote(MoteSpec(nid, Position(x, y), role=rest[0] if rest else "normal"), **mote_kw))
    return net

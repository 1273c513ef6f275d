class AbstractProxGNSection(object):
    """Abstract class to be inherited when implementing a specific section of the
    ProxGN facade (certification, solving, verification). It implements an init method
    which keeps a reference to the main ProxGN object, so that a section outlives a
    temporary facade as in ProxGN('quad2d').solver.solve(x0).
    """

    main_proxgn_object = None

    def __init__(self, main_proxgn_object):
        self.main_proxgn_object = main_proxgn_object

    @property
    def proxgn(self):
        return self.main_proxgn_object

    @property
    def problem(self):
        return self.proxgn.problem

"""
#   © 2024 EurekAILab. All rights reserved.
#   No part of this publication may be reproduced, distributed,
#   or transmitted in any form or by any means, including photocopying, recording,
#   or other electronic or mechanical methods, without the prior written permission of the publisher,
#   except in the case of brief quotations embodied in critical reviews and certain other noncommercial uses permitted by copyright law.
"""

from fastapi import APIRouter
from app.api.dtlab import router as dtlab_router

# Every service mounts under /api/v1/<service>
api_router = APIRouter()

# Decision theories: evaluate, behaviour table, problem check, Monte Carlo simulation, d-separation
api_router.include_router(dtlab_router, prefix="/dtlab", tags=["dtlab"])

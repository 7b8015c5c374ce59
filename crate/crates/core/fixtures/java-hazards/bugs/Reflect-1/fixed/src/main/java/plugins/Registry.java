package plugins;

import java.lang.reflect.Method;

public class Registry {
    public int compute(int input) {
        int scaled = input * 2;
        return scaled;
    }

    public Method lookup() throws NoSuchMethodException {
        return Registry.class.getMethod("compute", int.class);
    }
}

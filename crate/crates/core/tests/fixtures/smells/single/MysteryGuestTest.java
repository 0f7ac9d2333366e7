package demo;

import static org.junit.jupiter.api.Assertions.*;

import org.junit.jupiter.api.Test;

import java.io.IOException;
import java.nio.file.Files;
import java.nio.file.Path;

class MysteryGuestTest {
    @Test
    void readsOperandFromDisk() throws IOException {
        Calculator calc = new Calculator();
        String text = Files.readString(Path.of("operand.txt"));
        int operand = Integer.parseInt(text.trim());
        assertTrue(calc.isPositive(operand));
    }
}
